import functools

import pytest

from intersim.adversary import enumerate_adversaries
from intersim.exchange import get_exchange
from intersim.kernel import generate_system
from intersim.policy import next_round_robin
from intersim.topology import validate_intersection, validate_transmission_env

# Two in-lanes, two out-lanes; the lane-1 move to out-lane 3 fits beside any
# lane-0 move, everything else conflicts across lanes.
SPLIT = ([0, 1], [2, 3], [((0, 2), (1, 3)), ((0, 3), (1, 3))])
# Two in-lanes, one out-lane, every cross-lane pair conflicts.
TIGHT = ([0, 1], [2], [])
# Three in-lanes, one out-lane, only lanes 0 and 1 may cross together.
TRIPLE = ([0, 1, 2], [3], [((0, 3), (1, 3))])


@functools.lru_cache(maxsize=None)
def spec_of(name):
    lin, lout, compat = {"split": SPLIT, "tight": TIGHT, "triple": TRIPLE}[name]
    return validate_intersection(lin, lout, compat)


@functools.lru_cache(maxsize=None)
def space(name, model, pool, horizon):
    spec = spec_of(name)
    env = validate_transmission_env(spec=spec)
    return enumerate_adversaries(model, pool, horizon, spec, env)


_systems = {}


def system_for(name, exchange, model, protocol_factory, pool=("a", "b"), horizon=3):
    """Cached system; ``protocol_factory(spec, rr)`` builds the protocol."""
    key = (name, exchange, model, protocol_factory, pool, horizon)
    if key not in _systems:
        spec = spec_of(name)
        proto = protocol_factory(spec, next_round_robin(spec))
        _systems[key] = (proto, generate_system(spec, get_exchange(exchange), proto, space(name, model, pool, horizon), horizon))
    return _systems[key]


@pytest.fixture
def split():
    return spec_of("split")


@pytest.fixture
def tight():
    return spec_of("tight")


@pytest.fixture
def triple():
    return spec_of("triple")


_acceptance_key = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one summary line per acceptance criterion for the terminal report."""
    return request.config.stash.setdefault(_acceptance_key, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
