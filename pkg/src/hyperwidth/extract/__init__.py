"""Hypergraph extraction from SQL queries and XCSP constraint networks."""
