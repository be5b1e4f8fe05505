"""Seeded synthetic score sets with known analytic properties.

Random stream
-------------
Draws come from the PCG64 bit generator (O'Neill's 128-bit LCG with the
XSL-RR output permutation, as implemented by ``numpy.random.PCG64``) seeded
with the user's integer seed. Each 64-bit output ``r`` becomes the uniform
``((r >> 11) + 0.5) * 2**-53`` in the open interval (0, 1); normals are
``probit(u)`` using this package's quantile function, never numpy's
distribution samplers, whose streams are not version-stable.

Classes are generated in manifest order (bona fide first). For each class,
``n`` uniforms give the latent normal scores, then ``n * k`` uniforms
(``k`` = number of attack species) split the remaining probability mass
across attack classes, row by row.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from padeval.curves import probit
from padeval.errors import PadEvalError
from padeval.model import ClassTaxonomy, ScoreSet


def _exp_scalar(v: float) -> float:
    return math.exp(v) if v < 709.0 else math.inf


# scalar libm exp rather than numpy's CPU-dependent SIMD loop, for portable bytes
_exp = np.vectorize(_exp_scalar, otypes=[np.float64])


@dataclass(frozen=True)
class Logistic:
    """Strictly increasing map from the reals to (0, 1): ``1 / (1 + exp(-(x - center) / scale))``."""

    center: float = 0.5
    scale: float = 0.1

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale) and math.isfinite(self.center)):
            raise PadEvalError("logistic squash needs a finite center and a positive scale")

    def __call__(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.center) / self.scale
        return 1.0 / (1.0 + _exp(-z))


@dataclass(frozen=True)
class ClassGenerator:
    label: str
    loc: float
    scale: float
    n: int


@dataclass(frozen=True)
class SynthSpec:
    bona_fide: ClassGenerator
    species: tuple[ClassGenerator, ...]
    seed: int
    squash: Logistic = Logistic()

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        if not self.species:
            raise PadEvalError("synthetic spec needs at least one attack species")
        for g in self.generators:
            if not (g.scale > 0 and math.isfinite(g.scale) and math.isfinite(g.loc)):
                raise PadEvalError(f"class {g.label!r}: scale must be > 0 and loc finite")
            if isinstance(g.n, bool) or not isinstance(g.n, int) or g.n < 1:
                raise PadEvalError(f"class {g.label!r}: sample count must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise PadEvalError("seed must be an integer in [0, 2**64)")
        self.taxonomy  # validates names

    @property
    def generators(self) -> tuple[ClassGenerator, ...]:
        return (self.bona_fide, *self.species)

    @property
    def taxonomy(self) -> ClassTaxonomy:
        return ClassTaxonomy(self.bona_fide.label, tuple(g.label for g in self.species))

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        doc = json.loads(text)
        try:
            squash = Logistic(**doc.get("squash", {}))
            return cls(
                ClassGenerator(**doc["bona_fide"]),
                tuple(ClassGenerator(**g) for g in doc["attack_species"]),
                doc["seed"],
                squash,
            )
        except (KeyError, TypeError) as exc:
            raise PadEvalError(f"invalid synthetic spec: {exc}") from None


class _Stream:
    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n).astype(np.uint64)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        return probit(self.uniform(n))


def _draw(spec: SynthSpec):
    stream = _Stream(spec.seed)
    k = len(spec.species)
    for g in spec.generators:
        latent = g.loc + g.scale * stream.normal(g.n)
        shares = stream.uniform(g.n * k).reshape(g.n, k)
        yield g, latent, shares


def latent_scores(spec: SynthSpec) -> dict[str, np.ndarray]:
    """Pre-squash bona fide scores per class, i.e. the draws behind :func:`gen_multiclass`."""
    return {g.label: latent for g, latent, _ in _draw(spec)}


def gen_multiclass(spec: SynthSpec) -> ScoreSet:
    """Generate a score set following ``spec``.

    The bona fide score is the squashed latent draw; the remaining mass
    ``1 - s`` is split over attack classes in proportion to uniform shares,
    with the record's own species (if an attack) given an extra share of 1
    so it always holds the top attack score.
    """
    species = [g.label for g in spec.species]
    ids, labels, blocks = [], [], []
    width = max(6, len(str(max(g.n for g in spec.generators))))
    for g, latent, shares in _draw(spec):
        bf = spec.squash(latent)
        if g.label in species:
            shares[:, species.index(g.label)] += 1.0
        attack = (1.0 - bf)[:, None] * (shares / shares.sum(axis=1, keepdims=True))
        blocks.append(np.column_stack([bf, attack]))
        ids += [f"{g.label}-{i:0{width}d}" for i in range(g.n)]
        labels += [g.label] * g.n
    return ScoreSet(spec.taxonomy, tuple(ids), tuple(labels), np.vstack(blocks))


def two_class_spec(mu_bf: float, mu_attack: float, sigma: float, n_per_class: int, seed: int,
                   bona_fide: str = "bonafide", species: str = "attack",
                   squash: Logistic = Logistic()) -> SynthSpec:
    return SynthSpec(
        ClassGenerator(bona_fide, mu_bf, sigma, n_per_class),
        (ClassGenerator(species, mu_attack, sigma, n_per_class),),
        seed,
        squash,
    )


def gen_two_class(mu_bf: float, mu_attack: float, sigma: float, n_per_class: int, seed: int, **kw) -> ScoreSet:
    """Equal-variance Gaussian bona fide / single-species set.

    Its population EER is ``Phi(-(mu_bf - mu_attack) / (2 * sigma))``
    whatever the squash, since the EER depends on ranks only.
    """
    return gen_multiclass(two_class_spec(mu_bf, mu_attack, sigma, n_per_class, seed, **kw))


def analytic_eer(mu_bf: float, mu_attack: float, sigma: float) -> float:
    return 0.5 * math.erfc((mu_bf - mu_attack) / (2 * sigma) / math.sqrt(2))
