"""Reference efficiency values for the estimator comparison study.

``TABLES[t][model][n][measure]`` maps each estimator symbol to its value,
for ``t`` in (2, 3), ``measure`` in ("dE", "dS", "stein").  A cell stored as
``None`` is unreadable in the source and is skipped by every check.
"""

ESTIMATORS = ("E", "C", "S", "H", "L", "R", "F")
MEASURES = ("dE", "dS", "stein")


def _rows(*rows):
    return {m: dict(zip(ESTIMATORS, r)) for m, r in zip(MEASURES, rows)}


TABLES = {
    2: {
        "I": {
            10: _rows((0.1136, 0.1057, 0.104, 0.1025, 0.104, 0.1176, 0.1058),
                      (0.0911, 0.082, 0.0802, 0.0794, 0.0851, 0.0892, 0.0813),
                      (0.0869, 0.0639, 0.0615, 0.0604, 0.0793, 0.0728, 0.0626)),
            30: _rows((0.0788, 0.0669, 0.0626, 0.0611, 0.0642, 0.0882, 0.0652),
                      (0.0691, 0.0516, 0.0475, 0.0477, 0.0525, 0.0607, 0.049),
                      (0.058, 0.0242, 0.0207, 0.0223, 0.0295, 0.0265, 0.0216)),
        },
        "II": {
            10: _rows((0.0973, 0.0889, 0.0911, 0.0906, 0.093, 0.1014, 0.0923),
                      (0.0797, 0.0695, 0.0714, 0.0713, 0.0752, 0.0785, 0.0721),
                      (0.07, 0.0468, 0.0499, 0.0502, 0.0573, 0.0554, 0.0506)),
            30: _rows((0.0641, 0.0513, 0.0535, 0.0533, 0.058, 0.0732, 0.0551),
                      (0.0585, 0.0399, 0.0422, 0.0432, 0.0471, 0.0533, 0.0431),
                      (0.0452, 0.0151, 0.0176, 0.0196, 0.0214, 0.0214, 0.0183)),
        },
        "III": {
            10: _rows((0.0338, 0.0333, 0.0336, 0.0335, 0.0333, 0.0331, 0.0336),
                      (0.0195, 0.0193, 0.0194, 0.0194, 0.0192, 0.0191, 0.0194),
                      (0.0017, 0.0016, 0.0016, 0.0016, 0.0016, 0.0016, 0.0016)),
            30: _rows((0.0329, 0.0324, 0.0327, 0.0327, 0.0324, 0.0322, 0.0328),
                      (0.0187, 0.0184, 0.0185, 0.0185, 0.0183, 0.0182, 0.0185),
                      (0.0015, 0.0015, 0.0015, 0.0015, 0.0014, 0.0014, 0.0015)),
        },
        "IV": {
            10: _rows((0.119, 0.1012, 0.1006, 0.0991, 0.0996, 0.109, 0.1049),
                      (0.1202, 0.082, 0.0818, 0.0811, 0.0822, 0.086, 0.0922),
                      (0.1503, 0.064, 0.0637, 0.0639, 0.0676, 0.0636, 0.0639)),
            30: _rows((0.081, 0.0618, 0.0598, 0.0582, 0.0618, 0.0795, 0.0643),
                      (0.0828, 0.0489, 0.0469, 0.0472, 0.0503, 0.0572, 0.0528),
                      (0.0825, 0.0223, 0.021, 0.0228, 0.0251, 0.0235, 0.0217)),
        },
    },
    3: {
        "I": {
            10: _rows((0.0999, 0.2696, 0.0894, 0.0876, 0.1014, 0.5112, 0.092),
                      (0.2091, 0.2172, 0.1424, 0.1491, 0.1072, 0.3345, 0.1439),
                      (53.4893, 28.1505, 25.079, 27.7066, 12.4056, 15.2749, 25.497)),
            30: _rows((0.0708, 0.2836, 0.0552, 0.0531, 0.0801, 0.5515, 0.0587),
                      (0.2064, 0.2112, 0.1301, 0.1388, None, 0.3484, 0.1317),
                      (53.3301, 25.8512, 22.2974, 25.378, 8.5161, 12.95, 22.6973)),
        },
        "II": {
            10: _rows((0.0907, 0.4879, 0.0844, 0.0839, 0.1104, 0.75, 0.0861),
                      (0.1669, 0.3571, 0.1139, 0.1176, 0.1023, 0.5168, 0.1151),
                      (34.2082, 9.8147, 15.4552, 16.4905, 10.2085, 8.6754, 15.7207)),
            30: _rows((0.0606, 0.5151, 0.0509, 0.0504, 0.0954, 0.7787, 0.0533),
                      (0.1632, 0.3369, 0.1022, 0.1067, 0.0887, 0.5369, 0.1035),
                      (33.9321, 7.6303, 13.4332, 14.63, 7.9578, 7.4431, 13.693)),
        },
        "III": {
            10: _rows((0.0315, 0.0312, 0.0313, 0.0313, 0.0311, 0.0251, 0.0315),
                      (0.0162, 0.016, 0.0161, 0.0161, 0.016, 0.013, 0.0162),
                      (0.0034, 0.0029, 0.0029, 0.0029, 0.0028, 0.0028, 0.0029)),
            30: _rows((0.031, 0.0307, 0.0309, 0.0309, 0.0306, 0.0244, 0.031),
                      (0.0156, 0.0154, 0.0155, 0.0155, 0.0154, 0.0123, 0.0156),
                      (0.0024, 0.0019, 0.0019, 0.0019, 0.0019, 0.0019, 0.0019)),
        },
        "IV": {
            10: _rows((0.1055, 0.2519, 0.0848, 0.0819, 0.0895, 0.5214, 0.0933),
                      (0.2187, 0.197, 0.1253, 0.1301, 0.083, 0.3348, 0.1317),
                      (56.1488, 19.7674, 18.9143, 20.7028, 6.5634, 7.875, 17.4669)),
            30: _rows((0.0755, 0.2628, 0.0523, 0.0489, 0.0682, 0.5552, 0.0616),
                      (0.2098, 0.186, 0.1089, 0.1161, 0.0635, 0.3455, 0.1106),
                      (53.9159, 16.9026, 15.701, 17.9492, 4.0551, 6.541, 14.9515)),
        },
    },
}


def winners(table, model, n, measure):
    """Estimators sharing the smallest reference value in a row."""
    row = {e: v for e, v in TABLES[table][model][n][measure].items() if v is not None}
    best = min(row.values())
    return [e for e, v in row.items() if v == best]
