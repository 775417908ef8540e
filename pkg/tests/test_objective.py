"""
Closed-form loss terms are checked against hand evaluation and Monte Carlo estimates; the full objective is checked
against central finite differences on a tiny 64-bit model.
"""

import math
import warnings

import pytest
import torch
from torch import nn
from torch.distributions import Normal
from torch.func import functional_call

from app.networks import CONDITION_DISCRETE, GaussianPosterior, ScabNetwork
from app.objective import (
    RECON_BERNOULLI,
    RECON_SQUARED,
    cluster_loss,
    cluster_mi_lower_bound,
    kl_between_diag_gaussians,
    kl_to_standard_normal,
    mi_pairwise_term,
    pairwise_kl_matrix,
    reconstruction_loss,
    total_loss,
    vae_loss,
)
from app.utils.exceptions import InvalidArgumentError

F64 = torch.float64


def _posterior(mean, log_var):
    return GaussianPosterior(mean=torch.tensor(mean, dtype=F64), log_var=torch.tensor(log_var, dtype=F64))


def _random_case(generator, dim=2):
    """A posterior pair whose means differ by 1.5 to 2.5 along the first axis."""
    base = torch.rand(dim, generator=generator, dtype=F64) - 0.5
    offset = torch.zeros(dim, dtype=F64)
    offset[0] = 1.5 + torch.rand(1, generator=generator, dtype=F64).item()
    p = GaussianPosterior(
        mean=(base + offset).unsqueeze(0),
        log_var=(torch.rand(dim, generator=generator, dtype=F64) - 0.5).unsqueeze(0),
    )
    q = GaussianPosterior(
        mean=base.unsqueeze(0),
        log_var=(torch.rand(dim, generator=generator, dtype=F64) - 0.5).unsqueeze(0),
    )
    return p, q


def _monte_carlo_kl(p, q, generator, draws=1_000_000):
    p_law = Normal(p.mean[0], torch.exp(0.5 * p.log_var[0]))
    q_law = Normal(q.mean[0], torch.exp(0.5 * q.log_var[0]))
    z = p.mean[0] + torch.exp(0.5 * p.log_var[0]) * torch.randn(draws, p.mean.shape[1], generator=generator, dtype=F64)
    return float((p_law.log_prob(z).sum(-1) - q_law.log_prob(z).sum(-1)).mean())


class TestKlToStandardNormal:
    def test_standard_posterior(self):
        assert float(kl_to_standard_normal(_posterior([[0.0]], [[0.0]]))[0]) == 0.0

    def test_unit_mean(self):
        assert float(kl_to_standard_normal(_posterior([[1.0]], [[0.0]]))[0]) == pytest.approx(0.5)

    def test_variance_e(self):
        value = float(kl_to_standard_normal(_posterior([[0.0]], [[1.0]]))[0])
        assert value == pytest.approx(0.5 * (math.e - 2.0), abs=1e-12)
        assert value == pytest.approx(0.3591, abs=1e-4)

    def test_matches_monte_carlo(self):
        generator = torch.Generator().manual_seed(0)
        for _ in range(50):
            p, _ = _random_case(generator)
            prior = GaussianPosterior(mean=torch.zeros_like(p.mean), log_var=torch.zeros_like(p.log_var))
            estimate = _monte_carlo_kl(p, prior, generator)
            exact = float(kl_to_standard_normal(p)[0])
            assert abs(estimate - exact) <= 0.02 * exact


class TestKlBetweenGaussians:
    def test_identical(self):
        p = _posterior([[0.3, -1.0]], [[0.2, 0.1]])
        assert float(kl_between_diag_gaussians(p, p)[0]) == 0.0

    def test_shifted_mean(self):
        value = kl_between_diag_gaussians(_posterior([[0.0]], [[0.0]]), _posterior([[1.0]], [[0.0]]))
        assert float(value[0]) == pytest.approx(0.5)

    def test_wider_target(self):
        value = kl_between_diag_gaussians(_posterior([[0.0]], [[0.0]]), _posterior([[0.0]], [[math.log(4.0)]]))
        assert float(value[0]) == pytest.approx(0.5 * (math.log(4.0) - 0.75), abs=1e-12)

    def test_matches_monte_carlo(self):
        generator = torch.Generator().manual_seed(1)
        for _ in range(50):
            p, q = _random_case(generator)
            estimate = _monte_carlo_kl(p, q, generator)
            exact = float(kl_between_diag_gaussians(p, q)[0])
            assert abs(estimate - exact) <= 0.02 * exact

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            kl_between_diag_gaussians(_posterior([[0.0]], [[0.0]]), _posterior([[0.0, 0.0]], [[0.0, 0.0]]))


class TestPairwiseTerm:
    def test_matrix_matches_row_aligned_kl(self):
        generator = torch.Generator().manual_seed(2)
        posterior = GaussianPosterior(
            mean=torch.randn(4, 3, generator=generator, dtype=F64),
            log_var=torch.randn(4, 3, generator=generator, dtype=F64) * 0.3,
        )
        matrix = pairwise_kl_matrix(posterior)
        for n in range(4):
            for m in range(4):
                p = GaussianPosterior(posterior.mean[n : n + 1], posterior.log_var[n : n + 1])
                q = GaussianPosterior(posterior.mean[m : m + 1], posterior.log_var[m : m + 1])
                assert float(matrix[n, m]) == pytest.approx(float(kl_between_diag_gaussians(p, q)[0]), abs=1e-12)
        torch.testing.assert_close(torch.diagonal(matrix), torch.zeros(4, dtype=F64))

    def test_identical_posteriors(self):
        posterior = _posterior([[0.5, 1.0]] * 3, [[0.1, -0.2]] * 3)
        assert float(mi_pairwise_term(posterior)) == 0.0

    def test_two_samples(self):
        posterior = _posterior([[0.0], [1.0]], [[0.0], [0.0]])
        assert float(mi_pairwise_term(posterior)) == pytest.approx(0.25)

    def test_shrinking_means_decreases_term(self):
        generator = torch.Generator().manual_seed(3)
        mean = torch.randn(6, 2, generator=generator, dtype=F64)
        log_var = torch.full((6, 2), 0.3, dtype=F64)
        center = mean.mean(dim=0)
        before = mi_pairwise_term(GaussianPosterior(mean, log_var))
        after = mi_pairwise_term(GaussianPosterior(center + 0.5 * (mean - center), log_var))
        assert float(after) < float(before)

    def test_needs_two_samples(self):
        with pytest.raises(InvalidArgumentError):
            mi_pairwise_term(_posterior([[0.0]], [[0.0]]))


class TestReconstructionLoss:
    def test_perfect_reconstruction(self):
        x = torch.rand(3, 4, dtype=F64)
        assert float(reconstruction_loss(x, x.clone(), RECON_SQUARED)) == 0.0

    def test_squared_is_summed_over_features(self):
        x = torch.tensor([[1.0, 2.0], [0.0, 0.0]], dtype=F64)
        x_recon = torch.tensor([[0.0, 0.0], [1.0, 1.0]], dtype=F64)
        assert float(reconstruction_loss(x, x_recon, RECON_SQUARED)) == pytest.approx((5.0 + 2.0) / 2)

    def test_bernoulli_half(self):
        value = reconstruction_loss(torch.tensor([[1.0]], dtype=F64), torch.tensor([[0.5]], dtype=F64), RECON_BERNOULLI)
        assert float(value) == pytest.approx(math.log(2.0))

    def test_bernoulli_hand_evaluation(self):
        value = reconstruction_loss(
            torch.tensor([[1.0, 0.0]], dtype=F64), torch.tensor([[0.8, 0.6]], dtype=F64), RECON_BERNOULLI
        )
        assert float(value) == pytest.approx(-(math.log(0.8) + math.log(0.4)))
        assert float(value) == pytest.approx(1.1394, abs=1e-4)

    def test_bernoulli_saturated_output_stays_finite(self):
        value = reconstruction_loss(torch.tensor([[1.0]]), torch.tensor([[0.0]]), RECON_BERNOULLI)
        assert math.isfinite(float(value))

    def test_bernoulli_needs_unit_interval(self):
        with pytest.raises(InvalidArgumentError):
            reconstruction_loss(torch.tensor([[2.0]]), torch.tensor([[0.5]]), RECON_BERNOULLI)

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            reconstruction_loss(torch.zeros(1, 1), torch.zeros(1, 1), "l1")

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            reconstruction_loss(torch.zeros(1, 2), torch.zeros(1, 3), RECON_SQUARED)


def _tiny_network():
    return ScabNetwork(
        d_input=6, latent_dim=3, hidden_dims=(5, 4), condition_kind=CONDITION_DISCRETE, g_categories=2, seed=0
    ).double()


class TestVaeLoss:
    def test_terms_are_non_negative(self):
        generator = torch.Generator().manual_seed(4)
        network = _tiny_network()
        x = torch.rand(4, 6, generator=generator, dtype=F64)
        terms = vae_loss(
            network, x, torch.tensor([0, 1, 0, 1]), torch.randn(4, 3, generator=generator, dtype=F64), RECON_BERNOULLI
        )
        assert float(terms.recon) >= 0.0
        assert float(terms.kl_prior) >= 0.0
        assert terms.x_recon.shape == (4, 6)

    def test_identical_samples_have_identical_reconstructions(self):
        network = _tiny_network()
        x = torch.rand(1, 6, dtype=F64).repeat(3, 1)
        terms = vae_loss(network, x, torch.zeros(3, dtype=torch.long), torch.zeros(3, 3, dtype=F64), RECON_SQUARED)
        torch.testing.assert_close(terms.x_recon[0], terms.x_recon[1])
        torch.testing.assert_close(terms.x_recon[1], terms.x_recon[2])

    def test_centroid_lookup_changes_the_reconstruction(self):
        network = _tiny_network()
        x = torch.rand(2, 6, dtype=F64)
        c, noise = torch.tensor([0, 1]), torch.zeros(2, 3, dtype=F64)
        plain = vae_loss(network, x, c, noise, RECON_SQUARED)
        fused = vae_loss(network, x, c, noise, RECON_SQUARED, centroid_lookup=lambda z: torch.full_like(z, 5.0))
        assert not torch.allclose(plain.x_recon, fused.x_recon)


class TestClusterLoss:
    def test_embeddings_at_centroids(self):
        e = torch.tensor([[0.0, 0.0], [3.0, 1.0]], dtype=F64)
        assert float(cluster_loss(e.clone(), torch.tensor([0, 1]), e)) == 0.0

    def test_unit_distance(self):
        value = cluster_loss(torch.tensor([[1.0, 0.0]]), torch.tensor([0]), torch.zeros(1, 2))
        assert float(value) == pytest.approx(1.0)

    def test_shared_centroid(self):
        value = cluster_loss(torch.tensor([[0.0], [1.0]]), torch.tensor([0, 0]), torch.tensor([[0.5]]))
        assert float(value) == pytest.approx(0.25)

    def test_accepts_one_hot_assignments(self):
        z = torch.tensor([[0.0], [1.0]])
        e = torch.tensor([[0.5], [4.0]])
        one_hot = torch.tensor([[1.0, 0.0], [0.0, 1.0]])
        assert float(cluster_loss(z, one_hot, e)) == pytest.approx((0.25 + 9.0) / 2)

    def test_centroids_receive_no_gradient(self):
        z = torch.randn(3, 2, requires_grad=True)
        e = torch.randn(2, 2, requires_grad=True)
        cluster_loss(z, torch.tensor([0, 1, 1]), e).backward()
        assert e.grad is None
        assert z.grad is not None

    def test_assignment_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            cluster_loss(torch.zeros(1, 2), torch.tensor([2]), torch.zeros(2, 2))


class TestMiLowerBound:
    def test_equidistant(self):
        value = cluster_mi_lower_bound(
            torch.tensor([[0.0]], dtype=F64), torch.tensor([0]), torch.tensor([[-1.0], [1.0]], dtype=F64), 5.0
        )
        assert float(value) == pytest.approx(-math.log(2.0))

    def test_hand_evaluation(self):
        value = cluster_mi_lower_bound(
            torch.tensor([[0.0]], dtype=F64), torch.tensor([0]), torch.tensor([[0.5], [1.5]], dtype=F64), 5.0
        )
        assert float(value) == pytest.approx(-math.log1p(math.exp(-10.0)), rel=1e-9)
        assert float(value) == pytest.approx(-4.54e-5, rel=1e-2)

    def test_never_positive(self):
        generator = torch.Generator().manual_seed(5)
        for _ in range(20):
            z = torch.randn(8, 3, generator=generator, dtype=F64)
            e = torch.randn(4, 3, generator=generator, dtype=F64)
            s = torch.randint(0, 4, (8,), generator=generator)
            assert float(cluster_mi_lower_bound(z, s, e, 5.0)) <= 0.0

    def test_saturates_at_separated_centroids(self):
        tau = 5.0
        spacing = 10.0 / math.sqrt(tau)
        e = torch.tensor([[0.0, 0.0], [spacing, 0.0], [0.0, spacing]], dtype=F64)
        s = torch.tensor([0, 1, 2, 0])
        value = cluster_mi_lower_bound(e[s], s, e, tau)
        assert -1e-3 <= float(value) <= 0.0

    def test_non_positive_temperature(self):
        with pytest.raises(InvalidArgumentError):
            cluster_mi_lower_bound(torch.zeros(1, 1), torch.tensor([0]), torch.zeros(1, 1), 0.0)


class TestTotalLoss:
    def test_plain_conditional_vae(self):
        breakdown = total_loss(torch.tensor(2.0), torch.tensor(1.0), torch.tensor(3.0), torch.tensor(4.0), 0.0, 0.0)
        assert float(breakdown.total) == pytest.approx(3.0)

    def test_weighted_sum(self):
        breakdown = total_loss(torch.tensor(2.0), torch.tensor(1.0), torch.tensor(3.0), torch.tensor(4.0), 1.0, 0.1)
        assert float(breakdown.total) == pytest.approx(8.4)
        assert breakdown.as_dict()["pairwise_kl"] == pytest.approx(3.0)

    def test_all_zero(self):
        zero = torch.tensor(0.0)
        assert float(total_loss(zero, zero, zero, zero, 1.0, 0.1).total) == 0.0

    def test_reports_non_finite_term(self):
        breakdown = total_loss(
            torch.tensor(1.0), torch.tensor(float("nan")), torch.tensor(0.0), torch.tensor(0.0), 1.0, 0.1
        )
        assert breakdown.first_non_finite() == "kl_prior"

    def test_breakdown_of_a_graph_converts_without_warnings(self):
        weight = torch.tensor(2.0, requires_grad=True)
        breakdown = total_loss(weight * 1.5, weight * 0.5, weight, weight * 0.0, 1.0, 0.1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            values = breakdown.as_dict()
        assert values == pytest.approx(
            {"recon": 3.0, "kl_prior": 1.0, "pairwise_kl": 2.0, "cluster": 0.0, "total": 9.0}
        )
        breakdown.total.backward()
        assert float(weight.grad) == pytest.approx(4.5)

    def test_negative_weight(self):
        zero = torch.tensor(0.0)
        with pytest.raises(InvalidArgumentError):
            total_loss(zero, zero, zero, zero, -1.0, 0.1)


class _Objective(nn.Module):
    """The training objective of one minibatch as a function of the network parameters."""

    def __init__(self, network, centroids, assignments):
        super().__init__()
        self.network = network
        self.centroids = centroids
        self.assignments = assignments

    def forward(self, x, c, noise):
        terms = vae_loss(
            self.network,
            x,
            c,
            noise,
            RECON_BERNOULLI,
            centroid_lookup=lambda z: self.centroids[self.assignments],
        )
        pairwise = mi_pairwise_term(terms.posterior)
        clustering = cluster_loss(terms.z, self.assignments, self.centroids)
        return total_loss(terms.recon, terms.kl_prior, pairwise, clustering, 1.0, 0.1).total


def test_total_loss_gradient_matches_finite_differences():
    generator = torch.Generator().manual_seed(6)
    objective = _Objective(
        _tiny_network(),
        torch.randn(2, 3, generator=generator, dtype=F64),
        torch.tensor([0, 1, 1, 0]),
    )
    x = torch.rand(4, 6, generator=generator, dtype=F64)
    c = torch.tensor([0, 1, 0, 1])
    noise = torch.randn(4, 3, generator=generator, dtype=F64)
    names = [name for name, _ in objective.named_parameters()]
    parameters = tuple(p.detach().clone().requires_grad_(True) for p in objective.parameters())

    def loss(*values):
        return functional_call(objective, dict(zip(names, values)), (x, c, noise))

    assert torch.autograd.gradcheck(loss, parameters, eps=1e-6, atol=1e-6, rtol=1e-4)
