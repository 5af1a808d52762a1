"""Rooted trees and bubble types.

Everything here is exact integer bookkeeping.  A rooted tree is stored by
parent pointers; the strict order ``i < h`` means ``i`` is a proper ancestor
of ``h``.  Bubble types add a marked-point assignment ``j: M -> I`` and
nonnegative integer degrees ``lambda: I -> Z``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

__all__ = [
    "TreeError",
    "RootedTree",
    "BubbleType",
    "hat",
    "attach",
    "descendants",
    "closed_descendants",
    "not_above",
    "not_at_or_above",
    "with_root",
    "subtree_ops",
    "weights",
    "collapse",
    "basic_type",
    "type_leq",
    "canonical_form",
    "canonicalize",
    "is_equivalent",
    "automorphisms",
    "enumerate_trees",
    "enumerate_types",
    "type_to_json",
    "type_from_json",
]

AUT_LIMIT = 8


class TreeError(ValueError):
    """Raised for malformed trees or arguments outside an operation's domain."""


@dataclass(frozen=True)
class RootedTree:
    """A finite rooted tree, i.e. a linearly ordered set with a unique minimum.

    ``parents`` maps every element to its attaching element, the root to None.
    """

    parents: tuple[tuple[int, int | None], ...]

    def __post_init__(self) -> None:
        pmap = dict(self.parents)
        if len(pmap) != len(self.parents):
            raise TreeError("duplicate element ids")
        roots = [i for i, p in pmap.items() if p is None]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one minimal element, found {len(roots)}")
        for i, p in pmap.items():
            if p is not None and p not in pmap:
                raise TreeError(f"parent {p} of {i} is not an element")
        # every element must reach the root without cycles
        for i in pmap:
            seen = set()
            k: int | None = i
            while k is not None:
                if k in seen:
                    raise TreeError(f"cycle through element {i}")
                seen.add(k)
                k = pmap[k]
        object.__setattr__(self, "parents", tuple(sorted(self.parents, key=lambda t: t[0])))

    # construction -----------------------------------------------------
    @classmethod
    def from_parents(cls, parents: Mapping[int, int | None]) -> "RootedTree":
        return cls(tuple(parents.items()))

    @classmethod
    def from_relation(cls, elements: Iterable[int], less_than: Iterable[tuple[int, int]]) -> "RootedTree":
        """Build a tree from a strict order given as a set of pairs ``(i, h)`` with ``i < h``.

        The relation is transitively closed first, then checked for the
        linear-order condition and a unique minimum.
        """
        elems = sorted(set(elements))
        rel = {(a, b) for a, b in less_than}
        for a, b in rel:
            if a not in elems or b not in elems:
                raise TreeError(f"pair {(a, b)} uses unknown elements")
            if a == b:
                raise TreeError("strict order cannot relate an element to itself")
        # transitive closure
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in itertools.product(list(rel), list(rel)):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
        for a, b in rel:
            if (b, a) in rel:
                raise TreeError("relation is not antisymmetric")
        preds = {h: {i for i, k in rel if k == h} for h in elems}
        for h, ps in preds.items():
            for i1, i2 in itertools.combinations(ps, 2):
                if (i1, i2) not in rel and (i2, i1) not in rel:
                    raise TreeError(f"predecessors {i1}, {i2} of {h} are incomparable")
        minima = [h for h in elems if not preds[h]]
        if len(minima) != 1:
            raise TreeError(f"expected a unique minimal element, found {minima}")
        root = minima[0]
        for h in elems:
            if h != root and (root, h) not in rel:
                raise TreeError(f"element {h} is not above the minimal element")
        parents: dict[int, int | None] = {}
        for h in elems:
            ps = preds[h]
            if not ps:
                parents[h] = None
            else:
                # the unique maximal predecessor
                parents[h] = next(i for i in ps if all((k, i) in rel or k == i for k in ps))
        return cls.from_parents(parents)

    # basic queries ----------------------------------------------------
    @property
    def parent_map(self) -> dict[int, int | None]:
        return dict(self.parents)

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.parents)

    @property
    def root(self) -> int:
        return next(i for i, p in self.parents if p is None)

    def __len__(self) -> int:
        return len(self.parents)

    def __contains__(self, i: object) -> bool:
        return i in self.parent_map

    def children(self, i: int) -> tuple[int, ...]:
        return tuple(h for h, p in self.parents if p == i)

    def ancestors(self, h: int) -> tuple[int, ...]:
        """Strict predecessors of ``h``, nearest first."""
        pmap = self.parent_map
        out = []
        k = pmap[h]
        while k is not None:
            out.append(k)
            k = pmap[k]
        return tuple(out)

    def less(self, i: int, h: int) -> bool:
        return i in self.ancestors(h)

    def leq(self, i: int, h: int) -> bool:
        return i == h or self.less(i, h)

    @property
    def less_than(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, h) for h in self.elements for i in self.ancestors(h))

    def depth(self, h: int) -> int:
        return len(self.ancestors(h))

    def postorder(self) -> list[int]:
        """Elements with every child listed before its parent."""
        return sorted(self.elements, key=lambda h: -self.depth(h))

    def restrict(self, subset: Iterable[int]) -> "RootedTree":
        """Induced order on ``subset``; it must contain a unique minimum."""
        sub = set(subset)
        parents: dict[int, int | None] = {}
        for h in sub:
            parents[h] = next((a for a in self.ancestors(h) if a in sub), None)
        return RootedTree.from_parents(parents)


def hat(tree: RootedTree) -> frozenset[int]:
    """Non-minimal elements."""
    return frozenset(h for h, p in tree.parents if p is not None)


def attach(tree: RootedTree, h: int) -> int:
    """The attaching map: the largest element strictly below ``h``."""
    if h not in tree:
        raise TreeError(f"{h} is not an element")
    p = tree.parent_map[h]
    if p is None:
        raise TreeError("no parent: the minimal element has no attaching point")
    return p


def descendants(tree: RootedTree, i: int) -> frozenset[int]:
    if i not in tree:
        raise TreeError(f"{i} is not an element")
    return frozenset(h for h in tree.elements if tree.less(i, h))


def closed_descendants(tree: RootedTree, i: int) -> RootedTree:
    return tree.restrict(descendants(tree, i) | {i})


def _check_subset(tree: RootedTree, H: Iterable[int], *, non_minimal: bool) -> frozenset[int]:
    Hs = frozenset(H)
    allowed = hat(tree) if non_minimal else frozenset(tree.elements)
    bad = Hs - allowed
    if bad:
        raise TreeError(f"elements {sorted(bad)} are outside the allowed domain")
    return Hs


def not_above(tree: RootedTree, H: Iterable[int]) -> RootedTree:
    """Elements not strictly above any element of ``H``."""
    Hs = _check_subset(tree, H, non_minimal=False)
    keep = [i for i in tree.elements if not any(tree.less(h, i) for h in Hs)]
    return tree.restrict(keep)


def not_at_or_above(tree: RootedTree, H: Iterable[int]) -> RootedTree:
    """Elements neither equal to nor above any element of ``H``."""
    Hs = _check_subset(tree, H, non_minimal=True)
    keep = [i for i in tree.elements if not any(tree.leq(h, i) for h in Hs)]
    return tree.restrict(keep)


def with_root(tree: RootedTree, H: Iterable[int]) -> RootedTree:
    """``H`` together with the minimal element, with the induced order."""
    Hs = _check_subset(tree, H, non_minimal=True)
    return tree.restrict(Hs | {tree.root})


def subtree_ops(tree: RootedTree, op: str, arg) -> RootedTree | frozenset[int]:
    """Dispatch by name: ``D``, ``Dbar``, ``paren`` (strictly-above exclusion),
    ``sup`` (at-or-above exclusion) and ``with_root``."""
    ops = {
        "D": descendants,
        "Dbar": closed_descendants,
        "paren": not_above,
        "sup": not_at_or_above,
        "with_root": with_root,
    }
    if op not in ops:
        raise TreeError(f"unknown subtree operation {op!r}")
    return ops[op](tree, arg)


@dataclass(frozen=True)
class BubbleType:
    """Tree, marked-point assignment and degrees."""

    tree: RootedTree
    marks: tuple[tuple[int, int], ...] = ()
    degrees: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        elems = set(self.tree.elements)
        deg = dict(self.degrees)
        if set(deg) != elems:
            raise TreeError("degrees must be given for exactly the tree elements")
        if any(d < 0 for d in deg.values()):
            raise TreeError("degrees must be nonnegative")
        labels = [l for l, _ in self.marks]
        if len(set(labels)) != len(labels):
            raise TreeError("duplicate mark labels")
        for l, i in self.marks:
            if i not in elems:
                raise TreeError(f"mark {l} sits on unknown element {i}")
        object.__setattr__(self, "marks", tuple(sorted(self.marks)))
        object.__setattr__(self, "degrees", tuple(sorted(self.degrees)))
        for i in elems:
            if deg[i] == 0 and self.special_count(i) < 2:
                raise TreeError(f"unstable component {i}: degree 0 with fewer than 2 special points")

    @classmethod
    def build(cls, parents: Mapping[int, int | None], degrees: Mapping[int, int],
              marks: Mapping[int, int] | None = None) -> "BubbleType":
        return cls(RootedTree.from_parents(parents), tuple((marks or {}).items()), tuple(degrees.items()))

    @property
    def degree_map(self) -> dict[int, int]:
        return dict(self.degrees)

    @property
    def mark_map(self) -> dict[int, int]:
        return dict(self.marks)

    @property
    def labels(self) -> frozenset[int]:
        return frozenset(l for l, _ in self.marks)

    def marks_on(self, i: int) -> tuple[int, ...]:
        return tuple(l for l, k in self.marks if k == i)

    def special_count(self, i: int) -> int:
        return len(self.tree.children(i)) + len(self.marks_on(i))

    @property
    def total_degree(self) -> int:
        return sum(d for _, d in self.degrees)


def weights(ty: BubbleType) -> dict[int, int]:
    """``d_i = lambda_i + #marks on i + sum of d_h over children h``."""
    d: dict[int, int] = {}
    deg = ty.degree_map
    for i in ty.tree.postorder():
        d[i] = deg[i] + len(ty.marks_on(i)) + sum(d[h] for h in ty.tree.children(i))
    return d


def _nearest_kept(tree: RootedTree, kept: frozenset[int], i: int) -> int:
    if i in kept:
        return i
    return next(a for a in tree.ancestors(i) if a in kept)


def collapse(ty: BubbleType, H: Iterable[int]) -> BubbleType:
    """The type obtained by smoothing every node outside ``H``.

    Kept elements are ``H`` and the root; every other element's degree and
    marks move to its nearest kept ancestor.
    """
    Hs = _check_subset(ty.tree, H, non_minimal=True)
    kept = Hs | {ty.tree.root}
    sub = ty.tree.restrict(kept)
    deg = {i: 0 for i in kept}
    for h, d in ty.degrees:
        deg[_nearest_kept(ty.tree, kept, h)] += d
    marks = {l: _nearest_kept(ty.tree, kept, i) for l, i in ty.marks}
    return BubbleType(sub, tuple(marks.items()), tuple(deg.items()))


def basic_type(ty: BubbleType) -> BubbleType:
    """The single-component type with all degrees summed."""
    return collapse(ty, ())


def _order_embeddings(small: RootedTree, big: RootedTree) -> Iterator[dict[int, int]]:
    """Injective maps ``small -> big`` whose induced order matches, root to root."""
    s_el = list(small.elements)
    b_el = list(big.elements)
    for image in itertools.permutations(b_el, len(s_el)):
        emb = dict(zip(s_el, image))
        if emb[small.root] != big.root:
            continue
        if all(small.less(a, b) == big.less(emb[a], emb[b]) for a in s_el for b in s_el if a != b):
            yield emb


def type_leq(a: BubbleType, b: BubbleType) -> bool:
    """Whether ``a <= b``: ``b`` is obtained from ``a`` by smoothing nodes.

    ``b``'s index set must embed in ``a``'s as an ordered subset through the
    root; marks then sit on the nearest embedded ancestor and degrees add up
    over the elements that collapse onto each embedded element.
    """
    if a.labels != b.labels:
        raise TreeError("types carry different marked-point sets")
    if a.total_degree != b.total_degree or len(b.tree) > len(a.tree):
        return False
    if len(b.tree) > AUT_LIMIT:
        raise TreeError(f"order test is brute force and limited to {AUT_LIMIT} elements")
    amarks, bmarks = a.mark_map, b.mark_map
    bdeg = b.degree_map
    for emb in _order_embeddings(b.tree, a.tree):
        image = frozenset(emb.values())
        inv = {v: k for k, v in emb.items()}
        if any(inv[_nearest_kept(a.tree, image, amarks[l])] != bmarks[l] for l in amarks):
            continue
        agg = {i: 0 for i in b.tree.elements}
        for h, d in a.degrees:
            agg[inv[_nearest_kept(a.tree, image, h)]] += d
        if agg == bdeg:
            return True
    return False


def _canon(ty: BubbleType, i: int) -> tuple:
    kids = sorted(_canon(ty, h) for h in ty.tree.children(i))
    return (ty.degree_map[i], tuple(sorted(ty.marks_on(i))), tuple(kids))


def canonical_form(ty: BubbleType) -> tuple:
    """A hashable invariant that agrees exactly on equivalent types."""
    return _canon(ty, ty.tree.root)


def canonicalize(ty: BubbleType) -> tuple[BubbleType, dict[int, int]]:
    """Relabel elements ``0..|I|-1`` in canonical depth-first order.

    Returns the relabeled type and the map old id -> new id.
    """
    order: list[int] = []

    def visit(i: int) -> None:
        order.append(i)
        for h in sorted(ty.tree.children(i), key=lambda h: _canon(ty, h)):
            visit(h)

    visit(ty.tree.root)
    relabel = {old: new for new, old in enumerate(order)}
    pmap = ty.tree.parent_map
    parents = {relabel[i]: (None if pmap[i] is None else relabel[pmap[i]]) for i in order}
    degrees = {relabel[i]: d for i, d in ty.degrees}
    marks = {l: relabel[i] for l, i in ty.marks}
    return BubbleType.build(parents, degrees, marks), relabel


def is_equivalent(a: BubbleType, b: BubbleType) -> bool:
    return a.labels == b.labels and canonical_form(a) == canonical_form(b)


def automorphisms(ty: BubbleType) -> list[dict[int, int]]:
    """All order isomorphisms of the type onto itself, by brute force."""
    n = len(ty.tree)
    if n > AUT_LIMIT:
        raise TreeError(f"automorphism search is brute force and limited to {AUT_LIMIT} elements, got {n}")
    el = list(ty.tree.elements)
    pmap = ty.tree.parent_map
    deg = ty.degree_map
    out = []
    for perm in itertools.permutations(el):
        phi = dict(zip(el, perm))
        if any(deg[i] != deg[phi[i]] for i in el):
            continue
        if any((pmap[i] is None) != (pmap[phi[i]] is None) or
               (pmap[i] is not None and phi[pmap[i]] != pmap[phi[i]]) for i in el):
            continue
        if any(phi[i] != i for l, i in ty.marks):
            continue
        out.append(phi)
    return out


def enumerate_trees(n: int) -> Iterator[RootedTree]:
    """Every rooted tree on ``{0..n-1}`` whose parent ids are smaller than child ids.

    Every tree shape appears (usually several times, with different labels).
    """
    if n < 1:
        return
    for parents in itertools.product(*[range(k) for k in range(1, n)]):
        pm: dict[int, int | None] = {0: None}
        pm.update({k: parents[k - 1] for k in range(1, n)})
        yield RootedTree.from_parents(pm)


def enumerate_types(n: int, max_degree: int = 1, n_marks: int = 0) -> Iterator[BubbleType]:
    """Every stable bubble type on the trees of :func:`enumerate_trees`."""
    for tree in enumerate_trees(n):
        el = tree.elements
        for degs in itertools.product(range(max_degree + 1), repeat=len(el)):
            for mk in itertools.product(el, repeat=n_marks):
                try:
                    yield BubbleType(tree, tuple(enumerate(mk)), tuple(zip(el, degs)))
                except TreeError:
                    continue


def type_to_json(ty: BubbleType, *, canonical: bool = True) -> dict:
    if canonical:
        ty, _ = canonicalize(ty)
    pmap = ty.tree.parent_map
    deg = ty.degree_map
    return {
        "nodes": [{"id": i, "parent": pmap[i], "degree": deg[i]} for i in ty.tree.elements],
        "marks": [{"label": l, "node": i} for l, i in ty.marks],
    }


def type_from_json(data: dict | str) -> BubbleType:
    if isinstance(data, str):
        data = json.loads(data)
    parents = {int(nd["id"]): (None if nd["parent"] is None else int(nd["parent"])) for nd in data["nodes"]}
    degrees = {int(nd["id"]): int(nd["degree"]) for nd in data["nodes"]}
    marks = {int(m["label"]): int(m["node"]) for m in data.get("marks", [])}
    return BubbleType.build(parents, degrees, marks)
