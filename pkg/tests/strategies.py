import numpy as np
from hypothesis import strategies as st

from markov_cusum.markov_core import MarkovModel


@st.composite
def positive_chains(draw, n_symbols=st.integers(2, 3), order=st.just(1)):
    """Markov chains with every transition probability >= 0.05."""
    A = draw(n_symbols)
    r = draw(order)
    rows = []
    for _ in range(A ** r):
        w = draw(st.lists(st.floats(0.05, 1.0), min_size=A, max_size=A))
        w = np.array(w) / sum(w)
        rows.append(w)
    return MarkovModel(np.array(rows), order=r)


def symbol_seqs(n_symbols=2, min_size=1, max_size=30):
    return st.lists(st.integers(0, n_symbols - 1), min_size=min_size, max_size=max_size)
