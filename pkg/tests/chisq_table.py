# Frozen oracle: chi-square upper-tail probabilities computed before the
# build by 40-digit numerical integration of the density (mpmath.quad).
CHISQ_SF_TABLE = [
    (3.841459, 1, 0.049999994653195765),
    (5.991465, 2, 0.049999988677700832),
    (0.0, 1, 1.0),
    (0.0, 5, 1.0),
    (63.580499, 10, 7.56755937427507e-10),
    (79.661176, 1, 4.4444876737866341e-19),
    (150.383612, 10, 3.1080786433334408e-27),
    (5.775364, 10, 0.83376980206444659),
    (35.083233, 50, 0.94566846029884604),
    (41.365582, 10, 9.7205034905557498e-6),
    (63.082108, 20, 2.3500256391962981e-6),
    (90.48446, 100, 0.74147964373264935),
    (110.901779, 3, 7.0187274686211103e-24),
    (48.098642, 8, 9.4596633349364189e-8),
    (16.721555, 15, 0.33578053573322544),
    (15.913336, 15, 0.38783470654373788),
    (39.475791, 10, 2.0951274138394901e-5),
    (63.862077, 50, 0.089987890036207064),
    (72.307287, 15, 1.7283628152272485e-9),
    (95.456977, 75, 0.055677834934846421),
    (164.915733, 30, 1.430213549849354e-20),
    (80.20625, 8, 4.443143731293681e-14),
    (129.670406, 30, 2.3484497458281069e-14),
    (157.801294, 10, 9.2106272071051298e-29),
    (76.616056, 4, 9.068095469155264e-16),
    (196.85683, 100, 2.6484970968999739e-8),
    (26.208953, 50, 0.99778974104878013),
    (184.546666, 1, 4.9297761366452705e-42),
    (5.950521, 3, 0.11404245782159992),
    (121.590687, 2, 3.9529178833050074e-27),
    (161.065949, 2, 1.0591892476819079e-35),
    (94.757552, 50, 0.00013661118135366802),
    (126.065204, 5, 1.6266488619461069e-25),
    (167.135923, 30, 5.6684121394444595e-21),
    (107.979937, 2, 3.5682444775284966e-24),
    (194.19589, 5, 4.9518642123999751e-40),
    (60.120258, 3, 5.5405633577582474e-13),
    (167.208497, 100, 2.9093253552434503e-5),
    (97.557573, 10, 1.6775953804679618e-16),
    (101.490124, 50, 2.3113174332968197e-5),
    (81.293472, 75, 0.28970414227755215),
    (189.27808, 75, 7.5745900874143566e-12),
    (46.434724, 1, 9.4721941746779306e-12),
    (120.719347, 20, 2.0979450600695922e-16),
    (129.748521, 30, 2.2772556155213605e-14),
    (147.848815, 8, 5.5079569793317413e-28),
    (137.942621, 50, 3.650883644758654e-10),
    (49.257004, 4, 5.1606060362165573e-10),
    (44.649893, 8, 4.2871226141358883e-7),
    (103.678341, 3, 2.5144804631206497e-22),
]
