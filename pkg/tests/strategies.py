"""Hypothesis strategies for small hypergraphs."""
from hypothesis import strategies as st

from hyperwidth.core import Hypergraph

VERTS = [f"v{i}" for i in range(8)]


@st.composite
def hypergraphs(draw, max_edges=6, max_vertices=8):
    nv = draw(st.integers(2, max_vertices))
    verts = VERTS[:nv]
    edges = draw(st.lists(st.sets(st.sampled_from(verts), min_size=1, max_size=4), min_size=1, max_size=max_edges))
    h = Hypergraph.from_edges([(f"e{i}", sorted(e)) for i, e in enumerate(edges)], name="hyp")
    return h


def vertex_subsets(h):
    return st.sets(st.sampled_from(h.vertices)) if h.vertices else st.just(set())
