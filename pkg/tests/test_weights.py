from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from padeval.errors import PadEvalError
from padeval.rounding import round_half_up
from padeval.weights import class_weights, format_weights, parse_counts_csv, parse_counts_inline

EXP1 = {"bonafide": 9_526 + 11_613, "composite": 7_779 + 13_669, "synthetic": 9_931 + 9_931}
EXP2 = {"bonafide": 21_139, "print/plastic": 9_774 + 12_341 + 1_768 + 1_878, "display": 12_124 + 13_299}


class TestExamples:
    def test_balanced(self):
        assert class_weights({"a": 100, "b": 100}) == {"a": 1.0, "b": 1.0}

    def test_experiment_one(self):
        assert EXP1 == {"bonafide": 21_139, "composite": 21_448, "synthetic": 19_862}
        w = {k: round_half_up(v) for k, v in class_weights(EXP1).items()}
        assert w == {"bonafide": "0.9847", "composite": "0.9705", "synthetic": "1.0480"}

    def test_experiment_two(self):
        assert EXP2["print/plastic"] == 25_761 and EXP2["display"] == 25_423
        w = {k: round_half_up(v) for k, v in class_weights(EXP2).items()}
        assert w == {"bonafide": "1.1404", "print/plastic": "0.9358", "display": "0.9483"}

    def test_format(self):
        assert format_weights(class_weights({"a": 1, "b": 3})) == "class,weight\na,2.0000\nb,0.6667\n"


_counts = st.dictionaries(st.sampled_from("abcdefgh"), st.integers(1, 10**6), min_size=2)


class TestProperties:
    @given(_counts)
    def test_mass_conservation(self, counts):
        w = class_weights(counts)
        assert sum(w[k] * n for k, n in counts.items()) == pytest.approx(sum(counts.values()), rel=1e-12)
        exact = {k: Fraction(sum(counts.values()), len(counts) * n) for k, n in counts.items()}
        assert sum(exact[k] * n for k, n in counts.items()) == sum(counts.values())

    @given(_counts, st.integers(2, 50))
    def test_scaling_invariant(self, counts, m):
        a = class_weights(counts)
        b = class_weights({k: n * m for k, n in counts.items()})
        assert all(a[k] == pytest.approx(b[k], rel=1e-14) for k in counts)

    @given(_counts)
    def test_below_one_iff_above_mean(self, counts):
        w = class_weights(counts)
        total, k = sum(counts.values()), len(counts)
        for name, n in counts.items():
            # compare in integers to avoid float ties at the mean
            assert (w[name] < 1) == (n * k > total)


class TestErrors:
    @pytest.mark.parametrize("counts", [{"a": 5}, {"a": 0, "b": 1}, {"a": 1, "b": 2.5}, {"a": True, "b": 1}])
    def test_invalid(self, counts):
        with pytest.raises(PadEvalError):
            class_weights(counts)

    def test_inline(self):
        assert parse_counts_inline("bonafide=100, attack=200") == {"bonafide": 100, "attack": 200}

    @pytest.mark.parametrize("text", ["a=1,a=2", "a", "a=-1", "=3", "a=1.5"])
    def test_inline_invalid(self, text):
        with pytest.raises(PadEvalError):
            parse_counts_inline(text)

    def test_csv(self):
        assert parse_counts_csv("class,count\nbonafide,21139\ncomposite,21448\n") == {
            "bonafide": 21139, "composite": 21448}

    @pytest.mark.parametrize("text", ["name,n\na,1\n", "class,count\na,1,2\n", "class,count\na,x\n",
                                      "class,count\na,1\na,2\n"])
    def test_csv_invalid(self, text):
        with pytest.raises(PadEvalError):
            parse_counts_csv(text)
