import numpy as np
import pytest

from causalbandits.admg import Admg
from causalbandits.errors import (
    InvalidProbability,
    NonBinaryGraph,
    NonIntegerCosts,
    StateSpaceTooLarge,
)
from causalbandits.scm import (
    OBSERVE,
    Arm,
    CostSet,
    Cpt,
    Scm,
    arms_for,
    load_model,
    make_parallel_model,
    make_xor_model,
    model_from_dict,
    model_to_dict,
    optimal_value,
    oracle_means,
    parse_arm_label,
    ratio_best_arm,
    reward_best_arm,
    sample,
    sample_many,
    save_model,
)

from conftest import (
    brute_force_mean,
    brute_force_optimal_value,
    random_admg,
    random_scm,
)


class TestArms:
    def test_ordering_and_labels(self):
        g = Admg.create(["A", "B", "Y"], reward="Y")
        arms = arms_for(g)
        assert arms[0] is OBSERVE or arms[0].is_observe
        assert [a.label(g) for a in arms] == [
            "observe", "do(A=0)", "do(A=1)", "do(B=0)", "do(B=1)",
        ]
        for a in arms:
            assert parse_arm_label(g, a.label(g)) == a

    def test_costs_validated(self):
        g = Admg.create(["A", "Y"], reward="Y")
        with pytest.raises(ValueError, match="positive"):
            CostSet.from_mapping({Arm.intervene(0, 0): 0.0, Arm.intervene(0, 1): 1.0})
        with pytest.raises(ValueError, match="fixed to one"):
            CostSet.from_mapping({OBSERVE: 2.0, Arm.intervene(0, 0): 1.0})
        costs = CostSet.uniform(g, 3)
        assert costs.of(OBSERVE) == 1.0
        assert costs.of(Arm.intervene(0, 1)) == 3.0


class TestSampling:
    def test_degenerate_reward(self):
        g = Admg.create(["Y"], reward="Y", intervenable=[])
        scm = Scm(g, (Cpt((), np.array([[0.0, 1.0]])),), ())
        rng = np.random.default_rng(0)
        _, rewards = sample_many(scm, OBSERVE, 100, rng)
        assert (rewards == 1).all()

    def test_parallel_interventional_rate(self):
        scm = make_parallel_model(50)
        rng = np.random.default_rng(1)
        _, rewards = sample_many(scm, Arm.intervene(0, 1), 100_000, rng)
        assert abs(rewards.mean() - 0.8) < 0.01

    def test_clamping(self):
        scm = make_parallel_model(4)
        rng = np.random.default_rng(2)
        values, _ = sample_many(scm, Arm.intervene(2, 1), 500, rng)
        assert (values[:, 2] == 1).all()

    def test_clamped_cpt_never_read(self, confounded_chain):
        # perturbing the intervened node's table must not change the stream
        rng1 = np.random.default_rng(3)
        v1, r1 = sample_many(confounded_chain, Arm.intervene(0, 1), 200, rng1)
        cpts = list(confounded_chain.cpts)
        cpts[0] = Cpt(cpts[0].parents, np.array([[0.01, 0.99], [0.99, 0.01]]))
        perturbed = Scm(confounded_chain.graph, tuple(cpts), confounded_chain.latent_tables)
        rng2 = np.random.default_rng(3)
        v2, r2 = sample_many(perturbed, Arm.intervene(0, 1), 200, rng2)
        assert (v1 == v2).all() and (r1 == r2).all()

    def test_seed_reproducibility(self, confounded_chain):
        a = sample_many(confounded_chain, OBSERVE, 100, np.random.default_rng(9))
        b = sample_many(confounded_chain, OBSERVE, 100, np.random.default_rng(9))
        assert (a[0] == b[0]).all() and (a[1] == b[1]).all()

    def test_single_sample(self, confounded_chain):
        values, reward = sample(confounded_chain, OBSERVE, np.random.default_rng(4))
        assert values.shape == (3,)
        assert reward in (0, 1)

    def test_empirical_matches_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            g = random_admg(rng, max_nodes=4)
            scm = random_scm(rng, g)
            means = oracle_means(scm)
            for arm in list(means)[:3]:
                _, rewards = sample_many(scm, arm, 100_000, rng)
                assert abs(rewards.mean() - means[arm]) < 4 * np.sqrt(0.25 / 100_000) + 1e-9


class TestOracle:
    def test_parallel_exact(self):
        scm = make_parallel_model(50)
        means = oracle_means(scm)
        assert abs(means[Arm.intervene(0, 1)] - 0.8) <= 1e-12
        assert abs(means[OBSERVE] - 0.5) <= 1e-12
        assert abs(means[Arm.intervene(2, 1)] - 0.5) <= 1e-12

    def test_matches_full_enumeration(self, confounded_chain):
        means = oracle_means(confounded_chain)
        assert means[OBSERVE] == pytest.approx(brute_force_mean(confounded_chain, None), abs=1e-12)
        for arm in means:
            if arm.is_observe:
                continue
            want = brute_force_mean(confounded_chain, arm.node, arm.value)
            assert means[arm] == pytest.approx(want, abs=1e-12)

    def test_random_models_match_enumeration(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            g = random_admg(rng, max_nodes=5)
            scm = random_scm(rng, g)
            means = oracle_means(scm)
            for arm, mu in means.items():
                want = brute_force_mean(
                    scm, None if arm.is_observe else arm.node, arm.value
                )
                assert mu == pytest.approx(want, abs=1e-10)

    def test_state_space_cap(self):
        # a 26-node chain: the reward transitively depends on 25 binaries
        names = [f"X{k}" for k in range(26)] + ["Y"]
        g = Admg.create(
            names,
            directed=[(names[k], names[k + 1]) for k in range(26)],
            reward="Y",
        )
        cpts = [Cpt((), np.array([[0.5, 0.5]]))]
        for v in range(1, 27):
            cpts.append(Cpt((v - 1,), np.array([[0.6, 0.4], [0.4, 0.6]])))
        with pytest.raises(StateSpaceTooLarge):
            oracle_means(Scm(g, tuple(cpts), ()))


class TestOptimalValue:
    def test_observation_beats_interventions(self):
        means = {OBSERVE: 0.5, Arm.intervene(0, 1): 0.8}
        costs = CostSet.from_mapping({OBSERVE: 1.0, Arm.intervene(0, 1): 2.0})
        assert optimal_value(means, costs, 4) == pytest.approx(2.0)

    def test_zero_budget(self):
        means = {Arm.intervene(0, 1): 0.9}
        costs = CostSet.from_mapping({Arm.intervene(0, 1): 1.0})
        assert optimal_value(means, costs, 0) == 0.0

    def test_single_arm_floor(self):
        means = {Arm.intervene(0, 1): 0.3}
        costs = CostSet.from_mapping({Arm.intervene(0, 1): 2.0})
        assert optimal_value(means, costs, 7) == pytest.approx(0.9)

    def test_non_integer_costs_rejected(self):
        means = {Arm.intervene(0, 1): 0.3}
        costs = CostSet.from_mapping({Arm.intervene(0, 1): 1.5})
        with pytest.raises(NonIntegerCosts):
            optimal_value(means, costs, 5)

    def test_monotone_in_budget(self):
        rng = np.random.default_rng(7)
        means = {Arm.intervene(0, k): float(m) for k, m in enumerate(rng.uniform(0, 1, 4))}
        costs = CostSet.from_mapping(
            {a: float(c) for a, c in zip(means, rng.integers(1, 5, 4))}
        )
        values = [optimal_value(means, costs, b) for b in range(15)]
        assert all(v2 >= v1 - 1e-12 for v1, v2 in zip(values, values[1:]))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            k = int(rng.integers(1, 5))
            mus = [float(m) for m in rng.uniform(0, 1, k)]
            cs = [int(c) for c in rng.integers(1, 6, k)]
            arms = [Arm.intervene(0, 0), Arm.intervene(0, 1), Arm.intervene(1, 0), Arm.intervene(1, 1)][:k]
            means = dict(zip(arms, mus))
            costs = CostSet.from_mapping(dict(zip(arms, map(float, cs))))
            budget = int(rng.integers(0, 21))
            want = brute_force_optimal_value(mus, cs, budget)
            assert optimal_value(means, costs, budget) == pytest.approx(want, abs=1e-9)

    def test_best_arm_helpers(self):
        means = {OBSERVE: 0.5, Arm.intervene(0, 1): 0.8}
        costs = CostSet.from_mapping({OBSERVE: 1.0, Arm.intervene(0, 1): 2.0})
        assert reward_best_arm(means) == Arm.intervene(0, 1)
        assert ratio_best_arm(means, costs) == OBSERVE


class TestXorModel:
    def graph(self):
        return Admg.create(
            ["A", "B", "C", "Y"],
            directed=[("A", "C"), ("B", "C"), ("C", "Y")],
            bidirected=[("A", "B")],
            reward="Y",
        )

    def test_parity_rows(self):
        scm = make_xor_model(self.graph(), np.random.default_rng(0))
        c_cpt = scm.cpts[2]  # parents (A, B)
        assert c_cpt.table[0b01, 1] == pytest.approx(0.8)  # parity one
        assert c_cpt.table[0b10, 1] == pytest.approx(0.8)
        assert c_cpt.table[0b11, 1] == pytest.approx(0.2)  # parity zero
        assert c_cpt.table[0b00, 1] == pytest.approx(0.2)

    def test_root_marginal_range(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            g = Admg.create(["A", "Y"], directed=[("A", "Y")], reward="Y")
            scm = make_xor_model(g, rng)
            p1 = scm.cpts[0].table[0, 1]
            assert 0.5 <= p1 <= 1.0

    def test_latents_enter_parity(self):
        scm = make_xor_model(self.graph(), np.random.default_rng(2))
        # A has no directed parent but a latent one: not a free root
        assert scm.cpts[0].parents != ()
        assert scm.cpts[0].table.shape == (2, 2)

    def test_non_binary_rejected(self):
        g = Admg.create(["A", "Y"], directed=[("A", "Y")], reward="Y", domains=[3, 2])
        with pytest.raises(NonBinaryGraph):
            make_xor_model(g, np.random.default_rng(0))

    def test_construction_frozen_per_seed(self):
        a = make_xor_model(self.graph(), np.random.default_rng(5))
        b = make_xor_model(self.graph(), np.random.default_rng(5))
        for ca, cb in zip(a.cpts, b.cpts):
            assert (ca.table == cb.table).all()


class TestParallelModel:
    def test_defaults(self):
        scm = make_parallel_model(50)
        means = oracle_means(scm)
        assert means[Arm.intervene(0, 1)] == pytest.approx(0.8, abs=1e-12)
        assert means[OBSERVE] == pytest.approx(0.5, abs=1e-12)

    def test_zero_eps_flat(self):
        means = oracle_means(make_parallel_model(3, eps=0.0))
        assert all(m == pytest.approx(0.5, abs=1e-12) for m in means.values())

    def test_degenerate_first_marginal(self):
        means = oracle_means(make_parallel_model(1, p=[1.0]))
        assert means[OBSERVE] == pytest.approx(0.8, abs=1e-12)

    def test_invalid_probability(self):
        with pytest.raises(InvalidProbability):
            make_parallel_model(2, p=[1.5, 0.5])
        with pytest.raises(InvalidProbability):
            make_parallel_model(2, eps=0.9)


class TestModelFiles:
    def test_round_trip(self, tmp_path, confounded_chain):
        path = tmp_path / "model.yaml"
        save_model(confounded_chain, path)
        loaded = load_model(path)
        assert loaded.graph == confounded_chain.graph
        for a, b in zip(loaded.cpts, confounded_chain.cpts):
            assert a.parents == b.parents
            np.testing.assert_allclose(a.table, b.table)
        means_a = oracle_means(loaded)
        means_b = oracle_means(confounded_chain)
        for arm in means_a:
            assert means_a[arm] == pytest.approx(means_b[arm], abs=1e-12)

    def test_dict_round_trip_random(self):
        rng = np.random.default_rng(9)
        g = random_admg(rng, max_nodes=4)
        scm = random_scm(rng, g)
        again = model_from_dict(model_to_dict(scm))
        for arm, mu in oracle_means(scm).items():
            assert oracle_means(again)[arm] == pytest.approx(mu, abs=1e-12)

    def test_cpt_rows_must_sum_to_one(self):
        g = Admg.create(["Y"], reward="Y", intervenable=[])
        with pytest.raises(InvalidProbability):
            Scm(g, (Cpt((), np.array([[0.5, 0.6]])),), ())
