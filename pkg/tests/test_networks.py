import numpy as np
import pytest
import torch
from torch import nn

from app.networks import (
    CONDITION_CONTINUOUS,
    CONDITION_DISCRETE,
    CONDITION_NONE,
    GaussianPosterior,
    ScabNetwork,
    load_model,
    reparameterize,
    save_model,
)
from app.utils.exceptions import FormatError, InvalidArgumentError


def _network(**overrides):
    arguments = dict(
        d_input=6,
        latent_dim=3,
        hidden_dims=(5, 4),
        condition_kind=CONDITION_DISCRETE,
        g_categories=2,
        seed=0,
    )
    arguments.update(overrides)
    return ScabNetwork(**arguments)


def _zero(network):
    with torch.no_grad():
        for parameter in network.parameters():
            parameter.zero_()


class TestEncoder:
    def test_zero_parameters_give_standard_posterior(self):
        network = _network()
        _zero(network)
        posterior = network.encode(torch.randn(4, 6))
        assert torch.all(posterior.mean == 0)
        assert torch.all(posterior.log_var == 0)

    def test_output_shape(self):
        network = _network(d_input=20, latent_dim=10, hidden_dims=(16,))
        posterior = network.encode(torch.rand(32, 20))
        assert posterior.mean.shape == (32, 10)
        assert posterior.log_var.shape == (32, 10)
        assert len(posterior) == 32

    def test_identical_inputs_give_identical_posteriors(self):
        network = _network()
        x = torch.rand(1, 6).repeat(2, 1)
        posterior = network.encode(x)
        torch.testing.assert_close(posterior.mean[0], posterior.mean[1])
        torch.testing.assert_close(posterior.log_var[0], posterior.log_var[1])

    def test_log_variance_is_clamped(self):
        network = _network()
        with torch.no_grad():
            network.log_var_head.bias.fill_(100.0)
            network.log_var_head.weight.zero_()
        assert torch.all(network.encode(torch.rand(3, 6)).log_var == 10.0)

    def test_wrong_input_width(self):
        with pytest.raises(InvalidArgumentError):
            _network().encode(torch.rand(2, 5))

    def test_same_seed_same_parameters(self):
        first, second = _network(seed=3), _network(seed=3)
        for a, b in zip(first.parameters(), second.parameters()):
            assert torch.equal(a, b)


class TestReparameterize:
    def test_zero_noise_gives_mean(self):
        posterior = GaussianPosterior(mean=torch.tensor([[1.0, -2.0]]), log_var=torch.tensor([[0.3, -0.7]]))
        assert torch.equal(reparameterize(posterior, torch.zeros(1, 2)), posterior.mean)

    def test_unit_variance_adds_noise(self):
        posterior = GaussianPosterior(mean=torch.tensor([[1.0, -2.0]]), log_var=torch.zeros(1, 2))
        noise = torch.tensor([[0.5, 0.25]])
        torch.testing.assert_close(reparameterize(posterior, noise), torch.tensor([[1.5, -1.75]]))

    def test_empirical_mean(self):
        generator = torch.Generator().manual_seed(0)
        n = 100_000
        mean = torch.tensor([0.5, -1.0], dtype=torch.float64)
        log_var = torch.tensor([0.2, -0.4], dtype=torch.float64)
        posterior = GaussianPosterior(mean=mean.expand(n, 2), log_var=log_var.expand(n, 2))
        z = reparameterize(posterior, torch.randn(n, 2, generator=generator, dtype=torch.float64))
        sigma = torch.exp(0.5 * log_var)
        assert torch.all((z.mean(dim=0) - mean).abs() <= 4 * sigma / np.sqrt(n))

    def test_shape_mismatch(self):
        posterior = GaussianPosterior(mean=torch.zeros(2, 3), log_var=torch.zeros(2, 3))
        with pytest.raises(InvalidArgumentError):
            reparameterize(posterior, torch.zeros(2, 2))


class TestFuse:
    def _with_weight(self, weight):
        network = _network()
        with torch.no_grad():
            network.fusion.weight.copy_(weight)
            network.fusion.bias.zero_()
        return network

    def test_identity_on_embedding(self):
        network = self._with_weight(torch.cat([torch.eye(3), torch.zeros(3, 3)], dim=1))
        z, z_tilde = torch.randn(4, 3), torch.randn(4, 3)
        torch.testing.assert_close(network.fuse(z, z_tilde), z)

    def test_identity_on_centroid(self):
        network = self._with_weight(torch.cat([torch.zeros(3, 3), torch.eye(3)], dim=1))
        z, z_tilde = torch.randn(4, 3), torch.randn(4, 3)
        torch.testing.assert_close(network.fuse(z, z_tilde), z_tilde)

    def test_affine_in_embedding(self):
        network = _network().double()
        z1, z2, z_tilde = (torch.randn(4, 3, dtype=torch.float64) for _ in range(3))
        a, b = 0.7, -1.3
        expected = (
            a * network.fuse(z1, z_tilde)
            + b * network.fuse(z2, z_tilde)
            - (a + b - 1) * network.fuse(torch.zeros_like(z1), z_tilde)
        )
        torch.testing.assert_close(network.fuse(a * z1 + b * z2, z_tilde), expected)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            _network().fuse(torch.zeros(2, 3), torch.zeros(2, 2))


class TestDecoder:
    def test_zero_parameters_with_sigmoid_head(self):
        network = _network()
        _zero(network)
        output = network.decode(torch.randn(5, 3), torch.tensor([0, 1, 0, 1, 0]))
        assert torch.all(output == 0.5)

    def test_output_shape(self):
        network = _network(d_input=784, latent_dim=10, hidden_dims=(32,))
        output = network.decode(torch.randn(32, 10), torch.zeros(32, dtype=torch.long))
        assert output.shape == (32, 784)

    def test_depends_on_condition(self):
        network = _network()
        z_hat = torch.randn(1, 3)
        first = network.decode(z_hat, torch.tensor([0]))
        second = network.decode(z_hat, torch.tensor([1]))
        assert not torch.allclose(first, second)

    def test_continuous_condition(self):
        network = _network(condition_kind=CONDITION_CONTINUOUS, g_categories=None)
        assert network.condition_width == 1
        output = network.decode(torch.randn(2, 3), torch.tensor([0.1, 0.9]))
        assert output.shape == (2, 6)

    def test_unconditional_decoder_ignores_labels(self):
        network = _network(condition_kind=CONDITION_NONE, g_categories=None)
        assert network.condition_width == 0
        z_hat = torch.randn(2, 3)
        assert torch.equal(network.decode(z_hat, None), network.decode(z_hat, torch.tensor([0, 1])))

    def test_class_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            _network().decode(torch.randn(2, 3), torch.tensor([0, 2]))

    def test_missing_labels(self):
        with pytest.raises(InvalidArgumentError):
            _network().decode(torch.randn(2, 3), None)


class TestForward:
    def test_shapes(self):
        network = _network()
        posterior, z, x_recon = network(torch.rand(4, 6), torch.tensor([0, 1, 1, 0]), torch.randn(4, 3))
        assert posterior.mean.shape == (4, 3)
        assert z.shape == (4, 3)
        assert x_recon.shape == (4, 6)
        assert torch.all((x_recon > 0) & (x_recon < 1))

    def test_embed_returns_posterior_means(self):
        network = _network()
        X = torch.rand(10, 6)
        torch.testing.assert_close(network.embed(X, batch_size=3), network.encode(X).mean.detach())


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        network = _network(condition_kind=CONDITION_CONTINUOUS, g_categories=None, output_head="identity")
        path = str(tmp_path / "model.bin")
        save_model(network, path)
        restored = load_model(path)
        assert restored.hidden_dims == network.hidden_dims
        assert restored.condition_kind == CONDITION_CONTINUOUS
        assert restored.output_head == "identity"
        for a, b in zip(network.parameters(), restored.parameters()):
            assert torch.equal(a, b)

    def test_header(self, tmp_path):
        network = _network()
        path = tmp_path / "model.bin"
        save_model(network, str(path))
        blob = path.read_bytes()
        assert blob[:8] == b"SCABMODL"
        fields = np.frombuffer(blob, dtype="<u4", count=10, offset=8)
        np.testing.assert_array_equal(fields, [1, 0, 6, 3, 1, 2, 1, 2, 5, 4])
        n_parameters = sum(p.numel() for p in network.parameters())
        assert len(blob) == 16 + 4 * 8 + 4 * n_parameters

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.bin"
        path.write_bytes(b"NOTAMODL" + bytes(64))
        with pytest.raises(FormatError):
            load_model(str(path))

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "model.bin"
        save_model(_network(), str(path))
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(FormatError, match="size mismatch"):
            load_model(str(path))


def test_network_is_a_module():
    assert isinstance(_network(), nn.Module)
