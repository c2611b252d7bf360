"""Two-level feature taxonomy and enumeration of leaf combinations."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from trajtax.errors import ConfigurationError


@dataclass(frozen=True)
class TaxonomyLeaf:
    name: str
    parent: str
    prefix: str
    code: str  # short label used in combination names, e.g. "Ac"


@dataclass(frozen=True)
class CategoryCombination:
    leaves: tuple[TaxonomyLeaf, ...]  # taxonomy order

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(leaf.name for leaf in self.leaves)

    @property
    def label(self) -> str:
        return "+".join(leaf.code for leaf in self.leaves)

    def __len__(self) -> int:
        return len(self.leaves)

    def columns(self, columns: Sequence[str]) -> tuple[str, ...]:
        prefixes = tuple(leaf.prefix for leaf in self.leaves)
        return tuple(c for c in columns if c.startswith(prefixes))


@dataclass(frozen=True)
class Taxonomy:
    leaves: tuple[TaxonomyLeaf, ...]

    def __post_init__(self):
        if not self.leaves:
            raise ConfigurationError("taxonomy needs at least one leaf")
        names = [leaf.name for leaf in self.leaves]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate leaf names in {names}")
        codes = [leaf.code for leaf in self.leaves]
        if len(set(codes)) != len(codes):
            raise ConfigurationError(f"duplicate leaf codes in {codes}")

    @property
    def parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {}
        for leaf in self.leaves:
            out.setdefault(leaf.parent, []).append(leaf.name)
        return {k: tuple(v) for k, v in out.items()}

    def leaf(self, name: str) -> TaxonomyLeaf:
        for leaf in self.leaves:
            if leaf.name == name:
                return leaf
        raise KeyError(name)

    def tag(self, columns: Iterable[str]) -> tuple[str | None, ...]:
        """Leaf name for each column by longest matching prefix (None if none)."""
        by_len = sorted(self.leaves, key=lambda leaf: -len(leaf.prefix))
        tags = []
        for c in columns:
            tags.append(next((leaf.name for leaf in by_len if c.startswith(leaf.prefix)), None))
        return tuple(tags)

    def combination(self, names: Iterable[str]) -> CategoryCombination:
        wanted = set(names)
        unknown = wanted - {leaf.name for leaf in self.leaves}
        if unknown:
            raise ConfigurationError(f"unknown leaves: {sorted(unknown)}")
        return CategoryCombination(tuple(leaf for leaf in self.leaves if leaf.name in wanted))

    def combination_from_label(self, label: str) -> CategoryCombination:
        by_code = {leaf.code: leaf.name for leaf in self.leaves}
        try:
            return self.combination(by_code[c] for c in label.split("+"))
        except KeyError as exc:
            raise ConfigurationError(f"unknown leaf code in {label!r}") from exc

    def enumerate_combinations(self) -> list[CategoryCombination]:
        return enumerate_combinations(self.leaves)

    def to_dict(self) -> dict:
        return {
            "leaves": [
                {"name": leaf.name, "parent": leaf.parent, "prefix": leaf.prefix, "code": leaf.code}
                for leaf in self.leaves
            ]
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Taxonomy":
        try:
            entries = doc["leaves"]
            leaves = tuple(
                TaxonomyLeaf(
                    name=str(e["name"]),
                    parent=str(e["parent"]),
                    prefix=str(e["prefix"]),
                    code=str(e.get("code", e["name"][:1].upper())),
                )
                for e in entries
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed taxonomy document: {exc}") from exc
        return cls(leaves)


def default_taxonomy() -> Taxonomy:
    return Taxonomy(
        (
            TaxonomyLeaf("curvature", "geometric", "dg_", "C"),
            TaxonomyLeaf("indentation", "geometric", "ang_", "I"),
            TaxonomyLeaf("speed", "kinematic", "spd_", "S"),
            TaxonomyLeaf("acceleration", "kinematic", "acc_", "Ac"),
        )
    )


def enumerate_combinations(leaves: Iterable[TaxonomyLeaf]) -> list[CategoryCombination]:
    """All non-empty leaf subsets, by size and then by sorted leaf names."""
    leaves = tuple(leaves)
    if not leaves:
        raise ConfigurationError("cannot enumerate combinations of an empty leaf set")
    order = {leaf.name: i for i, leaf in enumerate(leaves)}
    out = []
    for size in range(1, len(leaves) + 1):
        groups = [tuple(sorted(c, key=lambda leaf: leaf.name)) for c in combinations(leaves, size)]
        for group in sorted(groups, key=lambda g: tuple(leaf.name for leaf in g)):
            out.append(CategoryCombination(tuple(sorted(group, key=lambda leaf: order[leaf.name]))))
    return out


def columns_for(combo: CategoryCombination, matrix) -> list[int]:
    """Indices of ``matrix`` columns whose leaf is in ``combo``, in column order."""
    untagged = [c for c, leaf in zip(matrix.columns, matrix.leaves) if leaf is None]
    if untagged:
        raise ConfigurationError(f"untagged feature columns: {untagged[:5]}")
    names = set(combo.names)
    return [j for j, leaf in enumerate(matrix.leaves) if leaf in names]
