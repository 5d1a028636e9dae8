from __future__ import annotations

import pytest

from exemplars import PACKS, all_twins, error_set, pack_inputs, pack_spec, twin_inputs
from simguard.patterns import effective_code
from simguard.runner import MemoryInputs, run_validation


@pytest.mark.parametrize("pack", PACKS)
def test_pack_is_clean(pack):
    report = run_validation(pack_spec(pack), pack_inputs(pack), jobs=1, timestamp="")
    assert report.violations == [] and report.totals.failed == 0


@pytest.mark.parametrize("twin", all_twins(), ids=lambda t: t.label)
def test_twin_fails_exactly(twin):
    report = run_validation(pack_spec(twin.pack), twin_inputs(twin), jobs=1, timestamp="")
    assert error_set(report) == twin.expect


def test_every_constraint_has_a_twin():
    covered = {cid for t in all_twins() for cid, _ in t.expect}
    declared = {d.id for p in PACKS for d in pack_spec(p).constraints}
    assert declared <= covered


@pytest.mark.parametrize(
    "pack, cid, code",
    [
        ("listing1", "loc.population", "1.A.i"),
        ("flee", "loc.populated", "1.B.ii"),
        ("flee", "closures.countries", "2.A.ii"),
        ("flee", "loc.routed", "2.A.i"),
        ("dflee", "rainfall.day", "3.A.i"),
        ("dflee", "flood.day", "4.A.i"),
        ("dflee", "flood.levels", "4.C.iii"),
        ("dflee", "locations.flood_zone", "4.C.ii"),
        ("facs", "ages.shares", "3.A.viii"),
        ("facs", "measures.partial_closure", "1.A.vii"),
        ("facs", "disease.syntax", "1.A.vi"),
    ],
)
def test_exemplar_codes(pack, cid, code):
    spec = pack_spec(pack)
    decl = next(d for d in spec.constraints if d.id == cid)
    assert str(effective_code(decl, spec)) == code


def test_gate_closed_skips_flood_checks():
    files = dict(pack_inputs("dflee").files)
    files["simsettings.yml"] = files["simsettings.yml"].replace("enabled: true", "enabled: false")
    files["flood_level.csv"] = files["flood_level.csv"].replace("4,4,2,1", "4,9,2,1")
    report = run_validation(pack_spec("dflee"), MemoryInputs(files), jobs=1, timestamp="")
    assert report.totals.failed == 0
    skipped = {cid for f in report.files for cid, _ in f.skipped}
    assert skipped == {"flood.levels", "locations.flood_zone"}
