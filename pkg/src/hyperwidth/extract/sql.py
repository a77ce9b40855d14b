"""SQL to hypergraph: conjunctive cores, subquery dependency graphs, vertex merging.

Parsing is delegated to sqlglot. Everything after the parse works on the
sqlglot AST: set operations are split into their operands, views and
FROM-clause subqueries are inlined with fresh aliases, nested subqueries in
WHERE become nodes of a dependency graph, and every surviving node is
reduced to a ``SimpleQuery`` (relations, attr = attr, attr = constant).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import sqlglot
from sqlglot import exp
from sqlglot.errors import ParseError

from ..core import Hypergraph

log = logging.getLogger(__name__)

Attr = tuple[str, str]  # (relation alias, attribute)

SEP = ":"  # alias path separator; legal in hypergraph identifiers


class SqlSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class UnresolvedReference(ValueError):
    pass


@dataclass(frozen=True)
class Relation:
    alias: str
    name: str
    attributes: tuple[str, ...]


@dataclass(frozen=True)
class SimpleQuery:
    relations: tuple[Relation, ...]
    equalities: frozenset[tuple[Attr, Attr]]
    constant_bindings: frozenset[tuple[Attr, str]]
    node: str = "q"
    query_index: int = 0
    lines: tuple[int, int] | None = None
    warnings: tuple[str, ...] = ()


@dataclass
class DependencyGraph:
    """Nesting tree of (sub)queries plus correlation arcs back to ancestors."""

    nodes: tuple[str, ...]
    arcs: frozenset[tuple[str, str]]
    parent: dict[str, str]
    query_index: int = 0
    lines: dict[str, tuple[int, int]] = field(default_factory=dict)
    _queries: dict[str, SimpleQuery] = field(default_factory=dict, repr=False, compare=False)

    def ancestors(self, node: str) -> list[str]:
        out = []
        while node in self.parent:
            node = self.parent[node]
            out.append(node)
        return out

    def eliminated(self) -> set[str]:
        """Nodes with an arc to one of their ancestors; they cannot be evaluated alone."""
        return {s for s, t in self.arcs if t in self.ancestors(s)}

    def forest(self) -> tuple[tuple[str, ...], frozenset[tuple[str, str]]]:
        gone = self.eliminated()
        keep = tuple(n for n in self.nodes if n not in gone)
        return keep, frozenset((s, t) for s, t in self.arcs if s not in gone and t not in gone)

    def simple_queries(self) -> list[SimpleQuery]:
        keep, _ = self.forest()
        return [self._queries[n] for n in keep]


# ---------------------------------------------------------------- parsing

def _parse(sql: str) -> list[exp.Expression]:
    try:
        statements = sqlglot.parse(sql)
    except ParseError as err:
        first = err.errors[0] if err.errors else {}
        raise SqlSyntaxError(first.get("description", str(err)), first.get("line"), first.get("col")) from err
    return [s for s in statements if s is not None]


def _name(node: exp.Expression | None) -> str:
    """Identifier text, lower-cased unless quoted."""
    if node is None:
        return ""
    if isinstance(node, exp.Identifier):
        return node.this if node.quoted else node.this.lower()
    if isinstance(node, str):
        return node.lower()
    ident = node.args.get("this")
    if isinstance(ident, exp.Identifier):
        return _name(ident)
    return node.name.lower()


def _line_span(node: exp.Expression) -> tuple[int, int] | None:
    lines = [n.meta["line"] for n in node.walk() if isinstance(n, exp.Identifier) and "line" in n.meta]
    return (min(lines), max(lines)) if lines else None


def _conjuncts(cond: exp.Expression | None) -> list[exp.Expression]:
    if cond is None:
        return []
    while isinstance(cond, exp.Paren):
        cond = cond.this
    if isinstance(cond, exp.And):
        return _conjuncts(cond.left) + _conjuncts(cond.right)
    return [cond]


def _nested_selects(node: exp.Expression) -> list[exp.Expression]:
    """Outermost SELECTs strictly below ``node``, in textual order."""
    found = []
    for n in node.walk(bfs=False, prune=lambda x: x is not node and isinstance(x, (exp.Select, exp.SetOperation))):
        if n is node:
            continue
        if isinstance(n, exp.Select):
            found.append(n)
        elif isinstance(n, exp.SetOperation):
            found.extend(_operands(n))
    return found


def _own_columns(node: exp.Expression) -> list[exp.Column]:
    return [
        n for n in node.walk(bfs=False, prune=lambda x: x is not node and isinstance(x, (exp.Select, exp.SetOperation)))
        if isinstance(n, exp.Column)
    ]


def _operands(query: exp.Expression) -> list[exp.Select]:
    if isinstance(query, exp.SetOperation):
        return _operands(query.left) + _operands(query.right)
    if isinstance(query, exp.Subquery):
        return _operands(query.this)
    return [query]


def _is_constant(node: exp.Expression) -> bool:
    return not any(isinstance(n, (exp.Column, exp.Select)) for n in node.walk())


# ---------------------------------------------------------------- catalog

@dataclass
class _Catalog:
    tables: dict[str, list[str]]
    views: dict[str, exp.Expression]
    fallback: dict[str, dict[str, None]] = field(default_factory=dict)
    collecting: bool = True

    def attributes(self, relation: str) -> list[str]:
        if relation in self.tables:
            return list(self.tables[relation])
        return list(self.fallback.get(relation, {}))

    def note(self, relation: str, attribute: str) -> None:
        if relation not in self.tables:
            self.fallback.setdefault(relation, {})[attribute] = None


@dataclass
class _Document:
    catalog: _Catalog
    queries: list[exp.Select]  # operands of top-level set operations, in order


def _document(sql: str, schema: Mapping[str, Sequence[str]] | None) -> _Document:
    tables = {k.lower(): [a.lower() for a in v] for k, v in (schema or {}).items()}
    views: dict[str, exp.Expression] = {}
    queries: list[exp.Select] = []
    for st in _parse(sql):
        if isinstance(st, exp.Create):
            kind = (st.args.get("kind") or "").upper()
            target = st.this
            if kind == "TABLE" and isinstance(target, exp.Schema):
                cols = [_name(c.this) for c in target.expressions if isinstance(c, exp.ColumnDef)]
                tables[_name(target.this)] = cols
            elif kind == "VIEW" and st.expression is not None:
                views[_name(target.this if isinstance(target, exp.Schema) else target)] = st.expression
            elif kind == "TABLE" and st.expression is not None:
                queries.extend(_operands(st.expression))
            continue
        if isinstance(st, (exp.Select, exp.SetOperation, exp.Subquery)):
            with_ = st.args.get("with_") or st.args.get("with")
            if with_ is not None and isinstance(st, exp.SetOperation):
                for cte in with_.expressions:
                    views[_name(cte.args["alias"].this)] = cte.this
            queries.extend(_operands(st))
            continue
        log.warning("skipping unsupported statement: %s", st.sql()[:60])
    return _Document(_Catalog(tables, views), queries)


# ---------------------------------------------------------------- scopes

@dataclass
class _Visible:
    """What an alias denotes inside a scope."""

    relation: str | None  # base relation name, or None for an inlined view
    full_alias: str
    columns: dict[str, Attr | None]


@dataclass
class _Scope:
    relations: list[Relation] = field(default_factory=list)
    equalities: list[tuple[Attr, Attr]] = field(default_factory=list)
    constants: list[tuple[Attr, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    subqueries: list[tuple[exp.Select, list]] = field(default_factory=list)
    outer: set[str] = field(default_factory=set)
    output: list[tuple[str, Attr | None]] = field(default_factory=list)


class _ScopeBuilder:
    def __init__(self, catalog: _Catalog):
        self.catalog = catalog

    def build(self, select: exp.Select, node: str, chain: list, prefix: str = "",
              views: Mapping[str, exp.Expression] | None = None) -> _Scope:
        sc = _Scope()
        views = dict(self.catalog.views if views is None else views)
        for key in ("group", "having", "order", "limit", "offset", "qualify", "windows"):
            if select.args.get(key):
                sc.warnings.append(f"stripped {key.upper()} clause")
        if any(select.find_all(exp.Window)):
            sc.warnings.append("stripped window function")
        with_ = select.args.get("with_") or select.args.get("with")
        if with_ is not None:
            for cte in with_.expressions:
                views[_name(cte.args["alias"].this)] = cte.this

        visible: dict[str, _Visible] = {}
        conditions: list[exp.Expression] = []
        from_ = select.args.get("from_") or select.args.get("from")
        sources = [from_.this] if from_ is not None else []
        for j in select.args.get("joins") or []:
            side = (j.args.get("side") or "").upper()
            if side:
                sc.warnings.append(f"{side} OUTER JOIN treated as inner join")
            if j.args.get("using"):
                sc.warnings.append("JOIN ... USING dropped")
            if j.args.get("on") is not None:
                conditions.append(j.args["on"])
            sources.append(j.this)
        for src in sources:
            self._source(src, sc, visible, views, node, chain, prefix)

        here = chain + [(node, visible)]
        where = select.args.get("where")
        conditions += _conjuncts(where.this) if where is not None else []
        conds = []
        for c in conditions:
            conds.extend(_conjuncts(c))
        for c in conds:
            self._condition(c, sc, visible, chain, node, here)

        for proj in select.expressions:
            for col in _own_columns(proj):
                self._resolve(col, sc, visible, chain, node)
            for sub in _nested_selects(proj):
                sc.subqueries.append((sub, here))
            sc.output.extend(self._projection(proj, sc, visible, chain, node))
        return sc

    # -- FROM items

    def _source(self, src, sc: _Scope, visible, views, node, chain, prefix) -> None:
        if isinstance(src, exp.Table):
            rel = _name(src.this)
            alias = _name(src.args["alias"].this) if src.args.get("alias") else rel
            full = prefix + alias
            if rel in views:
                self._inline(views[rel], alias, sc, visible, views, node, chain, full, f"view {rel}")
                return
            attrs = self.catalog.attributes(rel)
            visible[alias] = _Visible(rel, full, {a: (full, a) for a in attrs})
            sc.relations.append(Relation(full, rel, tuple(attrs)))
        elif isinstance(src, exp.Subquery):
            alias = _name(src.args["alias"].this) if src.args.get("alias") else f"sub{len(visible)}"
            self._inline(src.this, alias, sc, visible, views, node, chain, prefix + alias, "derived table")
        else:
            sc.warnings.append(f"unsupported FROM item dropped: {src.sql()[:60]}")

    def _inline(self, body, alias, sc: _Scope, visible, views, node, chain, full, what) -> None:
        ops = _operands(body)
        if len(ops) > 1:
            sc.warnings.append(f"{what} with set operation: only the first operand is inlined")
        inner = self.build(ops[0], node, chain, prefix=full + SEP, views=views)
        sc.relations += inner.relations
        sc.equalities += inner.equalities
        sc.constants += inner.constants
        sc.warnings += inner.warnings
        sc.subqueries += inner.subqueries
        sc.outer |= inner.outer
        cols: dict[str, Attr | None] = {}
        for name, ref in inner.output:
            cols.setdefault(name, ref)
        visible[alias] = _Visible(None, full, cols)

    # -- references

    def _resolve(self, col: exp.Column, sc: _Scope, visible, chain, node) -> Attr | None:
        """Resolve a column to a local attribute; record outer references.

        Returns None for references that point outside this scope or to a
        non-column view output.
        """
        attr = _name(col.this)
        table = _name(col.args.get("table")) if col.args.get("table") else None
        if table is not None:
            if table in visible:
                return self._lookup(visible[table], attr, sc)
            for owner, vis in reversed(chain):
                if table in vis:
                    if vis[table].relation is not None:
                        self.catalog.note(vis[table].relation, attr)
                    if owner != node:
                        sc.outer.add(owner)
                    return None
            raise UnresolvedReference(f"unknown table or alias {table!r} in {col.sql()}")
        hits = [v for v in visible.values() if attr in v.columns]
        if len(hits) > 1:
            sc.warnings.append(f"ambiguous column {attr!r}; using the first relation")
        if hits:
            return self._lookup(hits[0], attr, sc)
        for owner, vis in reversed(chain):
            if any(attr in v.columns for v in vis.values()):
                if owner != node:
                    sc.outer.add(owner)
                return None
        bases = [v for v in visible.values() if v.relation is not None]
        if len(bases) == 1:
            return self._lookup(bases[0], attr, sc)
        sc.warnings.append(f"unresolved column {attr!r} ignored")
        return None

    def _lookup(self, vis: _Visible, attr: str, sc: _Scope) -> Attr | None:
        if attr in vis.columns:
            return vis.columns[attr]
        if vis.relation is None:
            sc.warnings.append(f"view alias has no column {attr!r}")
            return None
        self.catalog.note(vis.relation, attr)
        if not self.catalog.collecting and vis.relation in self.catalog.tables:
            sc.warnings.append(f"column {attr!r} not declared for {vis.relation}")
        ref = (vis.full_alias, attr)
        vis.columns[attr] = ref
        for i, r in enumerate(sc.relations):
            if r.alias == vis.full_alias:
                sc.relations[i] = Relation(r.alias, r.name, r.attributes + (attr,))
        return ref

    # -- WHERE conjuncts

    def _condition(self, c: exp.Expression, sc: _Scope, visible, chain, node, here) -> None:
        subs = _nested_selects(c)
        refs = [self._resolve(col, sc, visible, chain, node) for col in _own_columns(c)]
        if subs:
            sc.subqueries.extend((s, here) for s in subs)
            sc.warnings.append(f"predicate with subquery dropped: {_short(c)}")
            return
        if isinstance(c, exp.EQ):
            left, right = c.left, c.right
            if isinstance(left, exp.Column) and isinstance(right, exp.Column):
                a, b = refs
                if a is not None and b is not None:
                    sc.equalities.append((a, b))
                else:
                    sc.warnings.append(f"correlated equality dropped: {_short(c)}")
                return
            for col_side, const_side in ((left, right), (right, left)):
                if isinstance(col_side, exp.Column) and _is_constant(const_side):
                    ref = refs[0]
                    if ref is not None:
                        sc.constants.append((ref, const_side.sql()))
                        return
            sc.warnings.append(f"non-structural equality dropped: {_short(c)}")
            return
        sc.warnings.append(f"non-conjunctive predicate dropped: {_short(c)}")

    def _projection(self, proj, sc, visible, chain, node) -> list[tuple[str, Attr | None]]:
        if isinstance(proj, exp.Star):
            return [(a, ref) for v in visible.values() for a, ref in v.columns.items()]
        if isinstance(proj, exp.Column) and isinstance(proj.this, exp.Star):
            v = visible.get(_name(proj.args.get("table")))
            return list(v.columns.items()) if v else []
        target = proj.this if isinstance(proj, exp.Alias) else proj
        name = _name(proj.args["alias"]) if isinstance(proj, exp.Alias) else _name(getattr(proj, "this", None))
        if isinstance(target, exp.Column):
            return [(name, self._resolve(target, sc, visible, chain, node))]
        return [(name, None)]


def _short(c: exp.Expression) -> str:
    s = c.sql()
    return s if len(s) <= 80 else s[:77] + "..."


# ---------------------------------------------------------------- graphs

def _graph(select: exp.Select, builder: _ScopeBuilder, index: int) -> DependencyGraph:
    nodes: list[str] = ["q"]
    arcs: set[tuple[str, str]] = set()
    parent: dict[str, str] = {}
    lines: dict[str, tuple[int, int]] = {}
    queries: dict[str, SimpleQuery] = {}
    counter = 0

    def visit(node: str, sel: exp.Select, chain: list) -> None:
        nonlocal counter
        sc = builder.build(sel, node, chain)
        span = _line_span(sel)
        if span:
            lines[node] = span
        for owner in sc.outer:
            arcs.add((node, owner))
        queries[node] = _simple(sc, node, index, span)
        children = []
        for sub, sub_chain in sc.subqueries:
            counter += 1
            sid = f"s{counter}"
            nodes.append(sid)
            arcs.add((node, sid))
            parent[sid] = node
            children.append((sid, sub, sub_chain))
        for sid, sub, sub_chain in children:
            visit(sid, sub, sub_chain)

    visit("q", select, [])
    return DependencyGraph(tuple(nodes), frozenset(arcs), parent, index, lines, queries)


def _simple(sc: _Scope, node: str, index: int, span) -> SimpleQuery:
    for w in sc.warnings:
        log.warning("query %d node %s: %s", index, node, w)
    return SimpleQuery(
        relations=tuple(sc.relations),
        equalities=frozenset(tuple(sorted(p)) for p in sc.equalities),
        constant_bindings=frozenset(sc.constants),
        node=node,
        query_index=index,
        lines=span,
        warnings=tuple(dict.fromkeys(sc.warnings)),
    )


def build_dependency_graphs(sql: str, schema: Mapping[str, Sequence[str]] | None = None) -> list[DependencyGraph]:
    """One dependency graph per top-level query (set operations are split first)."""
    doc = _document(sql, schema)
    builder = _ScopeBuilder(doc.catalog)
    log.disabled = True
    try:
        for i, q in enumerate(doc.queries):  # first pass only collects attributes per relation
            _graph(q, builder, i)
    finally:
        log.disabled = False
    doc.catalog.collecting = False
    return [_graph(q, builder, i) for i, q in enumerate(doc.queries)]


def build_dependency_graph(sql: str, schema: Mapping[str, Sequence[str]] | None = None) -> DependencyGraph:
    graphs = build_dependency_graphs(sql, schema)
    if len(graphs) != 1:
        raise ValueError(f"expected a single query, found {len(graphs)}; use build_dependency_graphs")
    return graphs[0]


def extract_simple_queries(sql: str, schema: Mapping[str, Sequence[str]] | None = None) -> list[SimpleQuery]:
    out: list[SimpleQuery] = []
    for g in build_dependency_graphs(sql, schema):
        out.extend(g.simple_queries())
    return out


# ---------------------------------------------------------------- hypergraph

def _vertex(a: Attr) -> str:
    return f"{a[0]}{SEP}{a[1]}"


def query_to_hypergraph(sq: SimpleQuery, name: str = "") -> Hypergraph:
    """One edge per relation instance; equalities merge vertices, constants delete them."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in sq.equalities:
        ra, rb = find(_vertex(a)), find(_vertex(b))
        if ra != rb:
            lo, hi = sorted((ra, rb))
            parent[hi] = lo
    bound = {find(_vertex(a)) for a, _ in sq.constant_bindings}
    edges = []
    for rel in sq.relations:
        vs = [find(_vertex((rel.alias, attr))) for attr in rel.attributes]
        edges.append((rel.alias, [v for v in vs if v not in bound]))
    return Hypergraph.from_edges(edges, name=name)


def sql_to_hypergraphs(sql: str, stem: str = "query",
                       schema: Mapping[str, Sequence[str]] | None = None) -> list[tuple[SimpleQuery, Hypergraph]]:
    return [
        (sq, query_to_hypergraph(sq, name=f"{stem}_{i}"))
        for i, sq in enumerate(extract_simple_queries(sql, schema))
    ]


def equalities_from(pairs: Iterable[tuple[str, str]]) -> frozenset[tuple[Attr, Attr]]:
    """Parse ``("r.a", "s.b")`` style pairs; handy for building queries by hand."""
    def attr(s: str) -> Attr:
        alias, _, col = s.partition(".")
        return alias, col

    return frozenset(tuple(sorted((attr(a), attr(b)))) for a, b in pairs)
