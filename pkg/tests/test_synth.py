import hashlib
import math

import numpy as np
import pytest

from padeval import metrics
from padeval.errors import PadEvalError
from padeval.model import serialize_scores
from padeval.synth import (
    ClassGenerator,
    Logistic,
    SynthSpec,
    analytic_eer,
    gen_multiclass,
    gen_two_class,
    latent_scores,
    two_class_spec,
)

FROZEN_50 = "2f66e8e876b43688945c4736fe4d283623199f0b936ca04adae4c071331861a9"


def _three_class(seed=5):
    return SynthSpec(
        ClassGenerator("bonafide", 2.0, 0.1, 300),
        (ClassGenerator("composite", -2.0, 0.1, 200), ClassGenerator("synthetic", -2.0, 0.1, 100)),
        seed,
        Logistic(0.0, 0.5),
    )


class TestTwoClass:
    def test_indistinguishable(self):
        assert abs(metrics.eer(gen_two_class(0.5, 0.5, 0.1, 20_000, seed=1)).eer - 0.5) < 0.02

    def test_analytic(self):
        assert analytic_eer(0.6, 0.4, 0.1) == pytest.approx(0.158655254, abs=1e-9)
        s = gen_two_class(0.6, 0.4, 0.1, 20_000, seed=7)
        assert abs(metrics.eer(s).eer - analytic_eer(0.6, 0.4, 0.1)) < 0.01

    def test_same_seed_same_bytes(self):
        a = serialize_scores(gen_two_class(0.6, 0.4, 0.1, 500, seed=9))
        b = serialize_scores(gen_two_class(0.6, 0.4, 0.1, 500, seed=9))
        assert a == b
        assert a != serialize_scores(gen_two_class(0.6, 0.4, 0.1, 500, seed=10))

    def test_frozen_stream(self):
        # guards against silent changes to the documented generator
        text = serialize_scores(gen_two_class(0.6, 0.4, 0.1, 50, seed=7))
        assert text.startswith("sample_id,label,bonafide,attack\nbonafide-000000,bonafide,")
        assert hashlib.sha256(text.encode()).hexdigest() == FROZEN_50

    def test_squash_preserves_eer_exactly(self):
        spec = two_class_spec(0.6, 0.4, 0.1, 3000, seed=2)
        squashed = gen_multiclass(spec)
        lat = latent_scores(spec)
        bf, atk = lat["bonafide"], lat["attack"]
        grid = np.unique(np.concatenate([[min(bf.min(), atk.min()) - 1], bf, atk, [max(bf.max(), atk.max()) + 1]]))
        b = np.array([(bf <= t).mean() for t in grid])
        a = np.array([(atk > t).mean() for t in grid])
        assert metrics.eer_from_rates(grid, a, b).eer == metrics.eer(squashed).eer

    @pytest.mark.parametrize("kwargs", [{"sigma": 0.0}, {"n_per_class": 0}, {"seed": -1}, {"sigma": float("nan")}])
    def test_invalid(self, kwargs):
        args = {"mu_bf": 0.6, "mu_attack": 0.4, "sigma": 0.1, "n_per_class": 10, "seed": 1, **kwargs}
        with pytest.raises(PadEvalError):
            gen_two_class(**args)


class TestMulticlass:
    def test_counts(self):
        s = gen_multiclass(_three_class())
        assert s.n_bona_fide == 300
        assert s.n_per_species == {"composite": 200, "synthetic": 100}

    def test_range(self):
        s = gen_multiclass(_three_class())
        assert np.all((s.scores >= 0) & (s.scores <= 1))
        assert np.allclose(s.scores.sum(axis=1), 1.0)

    def test_diagonal_confusion(self):
        cm = metrics.confusion_matrix(gen_multiclass(_three_class()), 0.5)
        assert np.array_equal(cm.counts, np.diag(np.diag(cm.counts)))

    def test_own_species_on_top(self):
        s = gen_multiclass(_three_class())
        for lab, row in zip(s.labels, s.scores):
            if lab != "bonafide":
                assert s.taxonomy.classes[1 + int(np.argmax(row[1:]))] == lab

    def test_from_json(self):
        text = ('{"bona_fide": {"label": "bonafide", "loc": 2.0, "scale": 0.1, "n": 300}, '
                '"attack_species": [{"label": "composite", "loc": -2.0, "scale": 0.1, "n": 200}, '
                '{"label": "synthetic", "loc": -2.0, "scale": 0.1, "n": 100}], '
                '"seed": 5, "squash": {"center": 0.0, "scale": 0.5}}')
        assert SynthSpec.from_json(text) == _three_class()
        assert gen_multiclass(SynthSpec.from_json(text)) == gen_multiclass(_three_class())

    @pytest.mark.parametrize("text", ['{"seed": 1}', '{"bona_fide": {"label": "b"}, "attack_species": [], "seed": 1}'])
    def test_bad_json(self, text):
        with pytest.raises(PadEvalError):
            SynthSpec.from_json(text)

    def test_logistic(self):
        f = Logistic()
        assert f(0.5) == 0.5
        assert np.all(np.diff(f(np.linspace(-1, 2, 301))) > 0)
        # far tails saturate in floating point but never reverse
        assert np.all(np.diff(f(np.linspace(-50, 50, 1001))) >= 0)
        assert f(-1e6) == 0.0 and math.isfinite(f(-1e6))
