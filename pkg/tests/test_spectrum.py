import numpy as np
import pytest

from oracles import ks_scan_oracle, ols_loglog
from pcarank.pca import PcaModel
from pcarank.spectrum import (
    Spectrum,
    SpectrumFit,
    fit_power_law,
    ks_bootstrap_p,
    spectrum_of,
    with_p_value,
    write_spectrum_report,
)


def power_law(beta=2.0, c=100.0, n=50):
    k = np.arange(1, n + 1, dtype=np.float64)
    return c * k**-beta


def noisy_power_law(seed, beta=2.0, c=100.0, n=50, sigma=0.05):
    rng = np.random.default_rng(seed)
    values = c * np.arange(1, n + 1, dtype=np.float64) ** -beta
    values = values * np.exp(rng.normal(0.0, sigma, n))
    return np.sort(values)[::-1]


class TestFitPowerLaw:
    def test_exact_power_law(self):
        fit = fit_power_law(power_law())
        assert abs(fit.beta - 2.0) < 1e-9
        assert fit.r_squared > 1 - 1e-12
        assert fit.k_min == 1
        assert fit.ks_stat == 0.0
        assert fit.ci_beta[0] == pytest.approx(2.0, abs=1e-9)
        assert fit.ci_beta[1] == pytest.approx(2.0, abs=1e-9)

    def test_plateau_head_is_skipped(self):
        values = power_law()
        values[:5] = 100.0
        fit = fit_power_law(values)
        assert fit.k_min >= 6
        oracle_k_min, _ = ks_scan_oracle(values)
        assert fit.k_min == oracle_k_min

    def test_geometric_decay_full_range_r2_below_099(self):
        values = 0.5 ** np.arange(1, 61, dtype=np.float64)
        _, _, r_squared = ols_loglog(values, k_min=1)
        assert r_squared < 0.99

    def test_matches_scan_oracle_on_noisy_spectra(self):
        for seed in range(6):
            values = noisy_power_law(seed, sigma=0.1)
            fit = fit_power_law(values)
            oracle_k_min, distances = ks_scan_oracle(values)
            assert fit.k_min == oracle_k_min
            assert fit.ks_stat == pytest.approx(distances[oracle_k_min], abs=1e-12)
            beta_oracle, _, r2_oracle = ols_loglog(values, fit.k_min)
            assert fit.beta == pytest.approx(beta_oracle, abs=1e-10)
            assert fit.r_squared == pytest.approx(r2_oracle, abs=1e-10)

    def test_needs_ten_positive_values(self):
        with pytest.raises(ValueError, match="at least 10"):
            fit_power_law(power_law(n=9))

    def test_tiny_values_truncated_first(self):
        values = np.concatenate([power_law(n=40), np.full(5, 1e-15)])
        fit = fit_power_law(values)
        assert abs(fit.beta - 2.0) < 1e-9

    def test_increasing_sequence_rejected(self):
        with pytest.raises(ValueError, match="non-increasing"):
            fit_power_law(np.linspace(1.0, 2.0, 20))


class TestBootstrap:
    def test_exact_input_gives_p_one(self):
        values = power_law()
        fit = fit_power_law(values)
        assert ks_bootstrap_p(fit, values, n_boot=50, seed=1) == 1.0

    def test_same_seed_same_p(self):
        values = noisy_power_law(3)
        fit = fit_power_law(values)
        a = ks_bootstrap_p(fit, values, n_boot=100, seed=7)
        b = ks_bootstrap_p(fit, values, n_boot=100, seed=7)
        assert a == b

    def test_scaling_invariance(self):
        values = noisy_power_law(12)
        fit = fit_power_law(values)
        scaled_fit = fit_power_law(values * 37.5)
        assert scaled_fit.ks_stat == pytest.approx(fit.ks_stat, abs=1e-12)
        assert scaled_fit.beta == pytest.approx(fit.beta, abs=1e-9)
        p = ks_bootstrap_p(fit, values, n_boot=100, seed=5)
        p_scaled = ks_bootstrap_p(scaled_fit, values * 37.5, n_boot=100, seed=5)
        assert p == p_scaled

    def test_zero_replicates_rejected(self):
        values = power_law()
        fit = fit_power_law(values)
        with pytest.raises(ValueError, match="n_boot"):
            ks_bootstrap_p(fit, values, n_boot=0, seed=1)


class TestSpectrumOf:
    def _model(self, eigenvalues):
        ev = np.asarray(eigenvalues, dtype=np.float64)
        d = ev.size
        return PcaModel(
            mean=np.zeros(d),
            components=np.eye(d),
            eigenvalues=ev,
            fitted_on="custom",
            n_fit_samples=d + 1,
        )

    def test_ratios(self):
        spec = spectrum_of(self._model([4.0, 1.0]))
        assert np.allclose(spec.explained_ratio, [0.8, 0.2])

    def test_single_nonzero(self):
        spec = spectrum_of(self._model([3.0, 0.0]))
        assert np.allclose(spec.explained_ratio, [1.0, 0.0])

    def test_all_equal(self):
        spec = spectrum_of(self._model([2.0, 2.0, 2.0, 2.0]))
        assert np.allclose(spec.explained_ratio, 0.25)

    def test_ratios_sum_to_one(self):
        rng = np.random.default_rng(2)
        values = np.sort(rng.uniform(0.1, 5.0, 12))[::-1]
        spec = spectrum_of(self._model(values))
        assert spec.explained_ratio.sum() == pytest.approx(1.0, abs=1e-9)

    def test_zero_spectrum_rejected(self):
        with pytest.raises(ValueError, match="variance"):
            spectrum_of(self._model([0.0, 0.0]))


class TestReport:
    def test_report_layout(self, tmp_path):
        values = power_law(n=12)
        fit = with_p_value(fit_power_law(values), 0.42)
        spec = Spectrum(eigenvalues=values, explained_ratio=values / values.sum())
        path = tmp_path / "spectrum.tsv"
        write_spectrum_report(spec, fit, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# beta\t")
        assert any(line.startswith("# p_value\t0.42") for line in lines)
        data_rows = [line for line in lines if not line.startswith("#")]
        assert len(data_rows) == 12
        assert data_rows[0].split("\t")[0] == "1"


def test_fit_is_frozen_dataclass():
    fit = fit_power_law(power_law())
    assert isinstance(fit, SpectrumFit)
    with pytest.raises(AttributeError):
        fit.beta = 3.0
