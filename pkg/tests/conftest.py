import numpy as np
from hypothesis import strategies as st

from graphfeedback.graphs import FeedbackGraph, GraphKind, generate


@st.composite
def graphs(draw, min_k=1, max_k=8):
    k = draw(st.integers(min_k, max_k))
    bits = draw(st.lists(st.booleans(), min_size=k * k, max_size=k * k))
    return FeedbackGraph.from_adjacency(np.array(bits, dtype=bool).reshape(k, k))


@st.composite
def graph_and_distribution(draw, min_k=1, max_k=8):
    g = draw(graphs(min_k, max_k))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=g.k, max_size=g.k))
    p = np.array(w) / sum(w)
    return g, p


def cycle(k):
    return generate(GraphKind.symmetric([(i, (i + 1) % k) for i in range(k)]), k)
