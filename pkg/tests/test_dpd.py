import numpy as np
import pytest

from swiptsim.dpd import (
    DpdDesign,
    chain_constellation_evm,
    design_from_scratch,
    design_ibo_reduction,
    evm,
    fit_inverse_polynomial,
    fit_pa_polynomial,
    load_design,
    make_training_set,
    predistort,
    save_design,
)
from swiptsim.ofdm import ComplexSignal, OfdmConfig
from swiptsim.pa import PaModel

CFG = OfdmConfig()
PA = PaModel.sspa(smoothness=1.2)


def test_fit_recovers_linear_transfer():
    x = np.linspace(0, 2, 500)
    fit = fit_pa_polynomial(x, 0.7 * x, order=3)
    np.testing.assert_allclose(fit.coeffs, [0, 0.7, 0, 0], atol=1e-10)
    assert fit.residual_rms < 1e-12
    assert fit.domain_max == 2.0


def test_fit_rejects_degenerate_training():
    with pytest.raises(ValueError):
        fit_pa_polynomial(np.ones(10), np.ones(10), order=2)
    with pytest.raises(ValueError):
        fit_pa_polynomial(np.ones(5), np.ones(6), order=1)


def test_ls_optimality():
    amp_in, amp_out = make_training_set(PA, CFG, seed=0)
    fit = fit_pa_polynomial(amp_in, amp_out, order=4)

    def residual(coeffs):
        v = np.vander(amp_in, 5, increasing=True)
        return np.sqrt(np.mean((v @ coeffs - amp_out) ** 2))

    base = residual(np.array(fit.coeffs))
    assert base == pytest.approx(fit.residual_rms, rel=1e-9)
    for i in range(5):
        for delta in (1e-3, -1e-3):
            c = np.array(fit.coeffs)
            c[i] += delta
            assert residual(c) >= base


def test_inverse_composition_error():
    amp_in, amp_out = make_training_set(PA, CFG, seed=0)
    inv = fit_inverse_polynomial(amp_out, amp_in, order=7)
    targets = np.linspace(0.05, 0.95 * inv.domain_max, 40)
    reached = PA.am_am(np.clip(inv(targets), 0.0, None))
    assert np.max(np.abs(reached - targets)) < 2e-2


def test_low_order_inverse_is_much_worse():
    amp_in, amp_out = make_training_set(PA, CFG, seed=0)
    inv7 = fit_inverse_polynomial(amp_out, amp_in, order=7)
    inv1 = fit_inverse_polynomial(amp_out, amp_in, order=1)
    targets = np.linspace(0.05, 0.95 * inv7.domain_max, 40)
    err7 = np.max(np.abs(PA.am_am(np.clip(inv7(targets), 0, None)) - targets))
    err1 = np.max(np.abs(PA.am_am(np.clip(inv1(targets), 0, None)) - targets))
    assert err1 > 5 * err7


def test_predistort_phase_preserved_and_clamps():
    amp_in, amp_out = make_training_set(PA, CFG, seed=0)
    inv = fit_inverse_polynomial(amp_out, amp_in, order=7)
    rng = np.random.default_rng(1)
    # scaled to stay inside the fitted domain, so no clamping here
    x = 0.25 * (rng.standard_normal(256) + 1j * rng.standard_normal(256))
    sig = ComplexSignal(x, 1.0)
    y = predistort(sig, inv)
    mask = np.abs(x) > 0
    np.testing.assert_allclose(np.angle(y.samples[mask]), np.angle(x[mask]), atol=1e-12)
    # way past the reachable output ceiling: clamped, with a warning
    big = ComplexSignal(np.array([10.0 + 0j]), 1.0)
    with pytest.warns(RuntimeWarning):
        out = predistort(big, inv)
    assert abs(out.samples[0]) <= inv(np.array([inv.domain_max]))[0] + 1e-9


def test_evm_basics():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    # bulk complex gain is removed before the error is measured
    assert evm(x, (0.3 - 1.8j) * x) < 1e-12
    assert evm(x, x + 0.1 * np.roll(x, 1)) > 0
    with pytest.raises(ValueError):
        evm(x, x[:-1])
    with pytest.raises(ValueError):
        evm(np.zeros(4, complex), np.ones(4, complex))


def test_design_point_frozen():
    design = design_from_scratch(PA, CFG, baseline_ibo_db=8.0, seed=0)
    assert design.ibo_reduction_db == pytest.approx(2.477963727712632, abs=1e-9)
    assert design.evm_baseline == pytest.approx(0.048815681574043805, abs=1e-12)
    assert design.evm_with_dpd <= design.evm_baseline * 1.01 + 1e-12
    assert not design.degenerate
    assert design.baseline_ibo_db == 8.0


def test_chain_evm_monotone_in_reduction():
    design = design_from_scratch(PA, CFG, seed=0)
    evms = [
        chain_constellation_evm(PA, CFG, 8.0 - r, design.inverse_fit, seed=3)
        for r in (0.0, 1.0, 2.0, 3.0)
    ]
    assert np.all(np.diff(evms) > 0)


def test_dpd_beats_no_dpd_at_reduced_backoff():
    design = design_from_scratch(PA, CFG, seed=0)
    ibo = 8.0 - design.ibo_reduction_db
    with_dpd = chain_constellation_evm(PA, CFG, ibo, design.inverse_fit, seed=4)
    without = chain_constellation_evm(PA, CFG, ibo, None, seed=4)
    assert with_dpd < without


def test_degenerate_design_flagged():
    # a limiter whose knee is far beyond any sample never distorts
    pa = PaModel.soft_limiter_model(a_sat=1e6)
    design = design_from_scratch(pa, CFG)
    assert design.degenerate
    assert design.ibo_reduction_db == 8.0
    assert design.evm_baseline < 1e-12
    assert any("upper bound" in n for n in design.notes)


def test_infeasible_inverse_returns_zero():
    hard = PaModel.sspa(smoothness=3.0)
    amp_in, amp_out = make_training_set(hard, CFG, seed=0)
    pa_fit = fit_pa_polynomial(amp_in, amp_out, 4)
    bad_inv = fit_inverse_polynomial(amp_out, amp_in, 1)
    design = design_ibo_reduction(hard, pa_fit, bad_inv, 0.0, CFG, seed=1)
    assert design.ibo_reduction_db == 0.0
    assert any("no feasible reduction" in n for n in design.notes)


def test_save_load_roundtrip(tmp_path):
    design = design_from_scratch(PA, CFG, seed=0)
    path = tmp_path / "design.txt"
    save_design(design, str(path), header=("written by the test suite",))
    assert path.read_text().startswith("# written by the test suite\n")
    loaded = load_design(str(path))
    assert isinstance(loaded, DpdDesign)
    assert loaded.ibo_reduction_db == design.ibo_reduction_db
    assert loaded.evm_baseline == design.evm_baseline
    assert loaded.pa_fit.coeffs == design.pa_fit.coeffs
    assert loaded.inverse_fit.coeffs == design.inverse_fit.coeffs
    assert loaded.degenerate == design.degenerate
    assert loaded.notes == design.notes


def test_training_set_covers_overdrive():
    amp_in, amp_out = make_training_set(PA, CFG, seed=0, overdrive=1.5)
    assert amp_in.max() >= 1.5 * PA.a_sat - 1e-9
    assert amp_in.size == amp_out.size
    np.testing.assert_allclose(amp_out, PA.am_am(amp_in))
