import itertools

from hypothesis import strategies as st

from tolbip.graph import DenseGraph


@st.composite
def graphs(draw, min_n=1, max_n=7):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return DenseGraph.from_edges(n, [p for p, b in zip(pairs, bits) if b])


def brute_distance(g: DenseGraph) -> int:
    """min over all 2^n side maps of ordered same-side adjacent pairs."""
    best = None
    for sides in itertools.product((0, 1), repeat=g.n):
        d = sum(1 for u in range(g.n) for v in range(g.n) if u != v and g.has_edge(u, v) and sides[u] == sides[v])
        best = d if best is None else min(best, d)
    return best or 0


def brute_maxcut(g: DenseGraph) -> int:
    best = 0
    for sides in itertools.product((0, 1), repeat=g.n):
        best = max(best, sum(1 for u, v in g.edges() if sides[u] != sides[v]))
    return best


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int("".join(c for c in s.split()[1] if c.isdigit())), s)):
            terminalreporter.write_line(line)
