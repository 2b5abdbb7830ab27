"""Brute-force reference computations, written independently of the package
internals. Tests compare package output against these."""

import itertools


def count_schedules(pool_size, horizon, n_in, n_out):
    """Assign each agent nothing or a (time, lane, intent); drop collisions."""
    slots = [None] + [(t, l, o) for t in range(1, horizon + 1) for l in range(n_in) for o in range(n_out)]
    n = 0
    for combo in itertools.product(slots, repeat=pool_size):
        used = [(c[0], c[1]) for c in combo if c is not None]
        if len(used) == len(set(used)):
            n += 1
    return n


def count_crash_patterns(pool_size, horizon):
    # each agent: never crashes, or crashes at one of the rounds 0..horizon-1
    return (horizon + 1) ** pool_size


def reference_run(schedule, lanes_in, protocol_step, horizon, transmit_ok=lambda m, a: True):
    """Minimal re-implementation of the round procedure for the intent exchange.

    ``schedule``: agent -> (time, lane, intent). ``protocol_step(agent, front,
    lane, intent, time, memory) -> bool`` says whether to go. Returns a list of
    (queues, memories) per time.
    """
    agents = sorted(schedule)
    queues = {l: [] for l in lanes_in}
    done = set()
    memory = {a: frozenset() for a in agents}
    out = [({l: tuple(q) for l, q in queues.items()}, dict(memory))]

    def where(a):
        for l, q in queues.items():
            if a in q:
                return l, q.index(a)
        return None

    for m in range(horizon):
        goes = set()
        for a in agents:
            p = where(a)
            front = p is not None and p[1] == 0
            lane = p[0] if p else None
            if front and protocol_step(a, front, lane, schedule[a][2], m, memory[a]):
                goes.add(a)
        for l in lanes_in:
            if queues[l] and queues[l][0] in goes:
                done.add(queues[l].pop(0))
        for a in agents:
            t, l, o = schedule[a]
            if t == m + 1:
                queues[l].append(a)
        sent = []
        for a in agents:
            p = where(a)
            if p is not None and p[1] == 0 and transmit_ok(m, a):
                sent.append((p[0], schedule[a][2]))
        new_mem = {}
        for a in agents:
            p = where(a)
            # only front-to-front delivery with the default environment
            new_mem[a] = frozenset(sent) if p is not None and p[1] == 0 else frozenset()
        memory = new_mem
        out.append(({l: tuple(q) for l, q in queues.items()}, dict(memory)))
    return out


def naive_knows(system, run, m, agent, holds):
    """K_agent by scanning every run, no index."""
    mine = run.local(m, agent)
    return all(holds(r) for r in system.runs.values() if r.local(m, agent) == mine)
