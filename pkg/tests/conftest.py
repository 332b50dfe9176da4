import pytest

from multiboson_qhahn.pearson import PearsonData, from_roots

Q = 0.5

# one parameter set per accepted case
REPS = {
    "i": from_roots("i", Q, a=-1.0, b=1.0, c=-2.0, d=3.0),
    "i-alpha": from_roots("i", Q, a=-1.0, b=1.0, c=2 + 1j, d=2 - 1j),
    "ii": from_roots("ii", Q, a=-1.0, b=1.0, c=2.0),
    "iii": from_roots("iii", Q, a=-1.0, b=1.0),
    "iv-1": from_roots("iv", Q, a=1.0, c=2.0, r=1.0),
    "v-1": from_roots("v", Q, a=1.0, r=0.5),
    "vi-a-1": from_roots("vi-a", Q, a=1.0, r=0.0),
}

# discrete q-Hermite I: B = w^2 - 1, S = B - (1-q) w A = -1 (case iii on [-1, 1])
Q_HERMITE = PearsonData(1.0 / (1 - Q), 0.0, 1.0, 0.0, -1.0, Q)

# rejected cases: B = w^2 with nonzero s1 (vii) or s1 = 0, s2 != 0 (viii)
REJECTED = {
    "vii-a": PearsonData(0.0, -2.0, 1.0, 0.0, 0.0, Q),
    "vii-b": PearsonData(0.0, 2.0, 1.0, 0.0, 0.0, Q),
    "viii": PearsonData(4.0, 0.0, 1.0, 0.0, 0.0, Q),
}


@pytest.fixture(params=sorted(REPS))
def rep(request):
    return request.param, REPS[request.param]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
