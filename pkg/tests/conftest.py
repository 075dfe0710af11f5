import math

from hypothesis import strategies as st

import acceptance_log

from hardysim.core import JointState, basis
from hardysim.spacetime import Boost, Event



def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
events = st.builds(Event, finite, finite)
boosts = st.builds(Boost, st.floats(-0.99, 0.99))


@st.composite
def states_at(draw, stage, exclude=()):
    """Random normalized state supported on ``basis(stage)`` minus ``exclude``."""
    labels = [lab for lab in basis(stage) if lab not in exclude]
    parts = st.floats(-1, 1, allow_nan=False)
    amps = {lab: complex(draw(parts), draw(parts)) for lab in labels}
    n2 = sum(abs(a) ** 2 for a in amps.values())
    if n2 < 1e-6:
        amps = {labels[0]: 1.0}
        n2 = 1.0
    s = 1 / math.sqrt(n2)
    return JointState({k: v * s for k, v in amps.items()}, stage)
