import numpy as np
import pytest

from padeval.model import ClassTaxonomy, ScoreSet


def make_set(bona_fide, species, bf_label="bonafide"):
    """Build a set from bona fide scores and ``{species: [bona-fide-class scores]}``.

    Attack-class columns share the remaining mass equally.
    """
    tax = ClassTaxonomy(bf_label, tuple(species))
    k = len(species)
    ids, labels, rows = [], [], []
    for lab, vals in [(bf_label, bona_fide), *species.items()]:
        for v in vals:
            ids.append(f"{lab}-{len(ids)}")
            labels.append(lab)
            rows.append([v] + [(1.0 - v) / k] * k)
    return ScoreSet(tax, tuple(ids), tuple(labels), np.array(rows, dtype=float).reshape(len(ids), k + 1))


def random_set(rng, max_records=1000, allow_empty=True):
    """Random multi-species set with ties, exact 0/1 scores and occasionally empty species."""
    k = int(rng.integers(1, 5))
    species = tuple(f"pai{j}" for j in range(k))
    tax = ClassTaxonomy("bonafide", species)
    n = int(rng.integers(10, max_records + 1))
    labels = ["bonafide"] * max(1, n // 3)
    present = [s for s in species if not allow_empty or rng.random() > 0.2] or [species[0]]
    labels += list(rng.choice(present, size=n - len(labels)))
    bf = rng.beta(2, 2, size=n)
    shift = np.array([0.2 if lab == "bonafide" else -0.1 for lab in labels])
    bf = np.clip(bf + shift, 0, 1)
    coarse = rng.random(n) < 0.3
    bf[coarse] = np.round(bf[coarse], 2)
    bf[rng.random(n) < 0.02] = 1.0
    bf[rng.random(n) < 0.02] = 0.0
    shares = rng.random((n, k))
    shares[rng.random((n, k)) < 0.1] = 0.5
    attack = (1 - bf)[:, None] * shares / shares.sum(axis=1, keepdims=True)
    attack = np.round(attack, 3)
    scores = np.column_stack([bf, np.clip(attack, 0, 1)])
    return ScoreSet(tax, tuple(f"s{i}" for i in range(n)), tuple(labels), scores)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_pair(rng, n=None, positive_source=False):
    """Border/source stage sets over the same samples.

    Border scores composite and synthetic, source scores print and display;
    each stage lists the other's species as unscored so every label parses.
    """
    border_tax = ClassTaxonomy("bonafide", ("composite", "synthetic"), ("print", "display"))
    source_tax = ClassTaxonomy("bonafide", ("print", "display"), ("composite", "synthetic"))
    n = int(rng.integers(20, 400)) if n is None else n
    labels = ["bonafide"] * (n // 3)
    labels += [str(v) for v in rng.choice(["composite", "synthetic", "print", "display"], size=n - len(labels))]
    bf = np.array([lab == "bonafide" for lab in labels])
    ids = tuple(f"img{i:04d}" for i in range(n))
    out = []
    for tax in (border_tax, source_tax):
        s = np.clip(rng.beta(2, 2, n) + np.where(bf, 0.25, -0.15), 0, 1)
        s = np.where(rng.random(n) < 0.3, np.round(s, 2), s)
        if positive_source and tax is source_tax:
            s = np.maximum(s, 0.01)
        share = rng.random(n)
        scores = np.column_stack([s, (1 - s) * share, (1 - s) * (1 - share)])
        out.append(ScoreSet(tax, ids, tuple(labels), scores))
    order = rng.permutation(n)
    src = out[1]
    out[1] = ScoreSet(src.taxonomy, tuple(src.sample_ids[i] for i in order),
                      tuple(src.labels[i] for i in order), src.scores[order])
    return out[0], out[1]


# -- acceptance summary ---------------------------------------------------------

_criteria: dict[str, tuple[int, str]] = {}
_outcomes: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _criteria[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    number, title = _criteria[report.nodeid]
    entry = _outcomes.setdefault(number, [title, "PASS", None])
    if report.failed:
        entry[1] = "FAIL"
    elif report.skipped:
        entry[1] = "SKIP"
    for key, value in report.user_properties:
        if key == "runtime":
            entry[2] = value


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        title, status, runtime = _outcomes[number]
        timing = f" ({runtime:.2f} s)" if runtime is not None else ""
        terminalreporter.write_line(f"criterion {number}: {status} - {title}{timing}")
