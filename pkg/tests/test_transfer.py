import numpy as np
import pytest

from gcope import errors
from gcope.autodiff import Param, Tensor
from gcope.graphstore import synth_dataset
from gcope.nn import make_encoder
from gcope.projection import ProjectionConfig
from gcope.transfer import (TransferConfig, accuracy, apply_prompt, binary_auc,
                            build_fewshot_task, evaluate_model, finetune,
                            induce_subgraph, macro_f1, macro_ovr_auc,
                            prompt_transfer, trainable_param_count)

from oracles import finite_diff_grad, floyd_warshall, rel_err


def target_graph(n=60, classes=3, d=8, h=0.85, seed=0):
    return synth_dataset(n, classes, d, h, seed)


# ------------------------------------------------------------------- splitting

def test_split_partition_and_per_class_counts():
    g = target_graph()
    task = build_fewshot_task(g, k_shot=2, seed=1)
    train, val, test = task.train_ids, task.val_ids, task.test_ids
    allids = np.concatenate([train, val, test])
    assert np.array_equal(np.sort(allids), np.arange(g.num_nodes))
    assert allids.size == np.unique(allids).size
    for cl in range(task.c_way):
        assert int((g.labels[train] == cl).sum()) == 2
    rest = g.num_nodes - train.size
    assert val.size == max(1, min(round(rest / 10), rest - 1))


def test_split_deterministic_and_seed_sensitive():
    g = target_graph()
    a = build_fewshot_task(g, 2, seed=5)
    b = build_fewshot_task(g, 2, seed=5)
    c = build_fewshot_task(g, 2, seed=6)
    assert np.array_equal(a.train_ids, b.train_ids)
    assert np.array_equal(a.val_ids, b.val_ids)
    assert not np.array_equal(a.train_ids, c.train_ids) or \
        not np.array_equal(a.val_ids, c.val_ids)


def test_split_insufficient_support():
    g = target_graph(n=9, classes=3)
    with pytest.raises(errors.InsufficientClassSupport):
        build_fewshot_task(g, k_shot=2)


# ------------------------------------------------------------------- induction

def path_graph(n, d=4, seed=0):
    rng = np.random.default_rng(seed)
    edges = np.array([[i, i + 1] for i in range(n - 1)])
    from gcope.graphstore import GraphDataset
    return GraphDataset(name="path",
                        features=rng.normal(size=(n, d)).astype(np.float32),
                        edges=edges, labels=np.zeros(n, dtype=np.int64),
                        num_classes=1)


def test_induce_subgraph_path_example():
    g = path_graph(6)
    sub = induce_subgraph(g, 2, hops=2)
    # center first, then breadth-first order with index ties ascending
    assert sub.nodes.tolist() == [2, 1, 3, 0, 4]
    assert sub.center_pos == 0
    assert sub.adjacency.shape == (5, 5)
    assert np.array_equal(sub.features, g.features[sub.nodes])


@pytest.mark.parametrize("seed", range(6))
def test_induce_subgraph_matches_floyd_warshall(seed):
    g = target_graph(n=25, seed=seed)
    dist = floyd_warshall(g.adjacency.toarray())
    for center in (0, 7, 24):
        for hops in (1, 2, 3):
            sub = induce_subgraph(g, center, hops)
            want = set(np.flatnonzero(dist[center] <= hops).tolist())
            assert set(sub.nodes.tolist()) == want


def test_induce_subgraph_center_out_of_range():
    g = target_graph(n=10)
    with pytest.raises(errors.IndexOutOfRange):
        induce_subgraph(g, 10, hops=2)


# -------------------------------------------------------------------- training

def pretrained_encoder(d_p=8, hidden=8, seed=0):
    return make_encoder("gcn", d_p, hidden=hidden, activation="tanh", seed=seed)


def test_zero_learning_rate_changes_nothing():
    g = target_graph()
    task = build_fewshot_task(g, 1, seed=0)
    enc = pretrained_encoder()
    before = [p.data.copy() for p in enc.params()]
    model = finetune(enc, task, TransferConfig(epochs=3, learning_rate=0.0),
                     ProjectionConfig(d_p=8))
    for p, old in zip(model.encoder.params(), before):
        assert np.array_equal(p.data, old)
    assert np.all(model.head_w.data == 0.0)
    # the source encoder object itself is never mutated
    for p, old in zip(enc.params(), before):
        assert np.array_equal(p.data, old)


def test_finetune_learns_separable_task():
    g = target_graph(n=60, h=0.9, seed=1)
    task = build_fewshot_task(g, 3, seed=0)
    enc = pretrained_encoder(seed=1)
    model = finetune(enc, task, TransferConfig(epochs=60, learning_rate=5e-3),
                     ProjectionConfig(d_p=8))
    rep = evaluate_model(model, task, "test")
    assert rep.acc > 0.6
    assert rep.auc > 0.7


def test_finetune_deterministic_across_runs():
    g = target_graph()
    task = build_fewshot_task(g, 2, seed=2)
    reports, weights = [], []
    for _ in range(2):
        enc = pretrained_encoder(seed=3)
        model = finetune(enc, task, TransferConfig(epochs=10, learning_rate=1e-3),
                         ProjectionConfig(d_p=8))
        reports.append(evaluate_model(model, task, "test"))
        weights.append(model.head_w.data.tobytes())
    assert reports[0] == reports[1]
    assert weights[0] == weights[1]


# --------------------------------------------------------------------- prompts

def test_zero_prompt_tokens_leave_features_unchanged():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 4))
    out = apply_prompt(Tensor(x.copy()), Param(np.zeros((3, 4))))
    assert np.array_equal(out.data, x)


def test_prompt_transfer_keeps_encoder_frozen():
    g = target_graph()
    task = build_fewshot_task(g, 2, seed=0)
    enc = pretrained_encoder()
    before = [p.data.tobytes() for p in enc.params()]
    model = prompt_transfer(enc, task, TransferConfig(
        mode="prompt", epochs=8, learning_rate=1e-2), ProjectionConfig(d_p=8))
    after = [p.data.tobytes() for p in model.encoder.params()]
    assert before == after


def test_prompt_trainable_param_count():
    g = target_graph(n=120, classes=5, d=16, seed=4)
    task = build_fewshot_task(g, 2, seed=0)
    enc = make_encoder("gcn", 100, hidden=100, seed=0)
    model = prompt_transfer(enc, task, TransferConfig(
        mode="prompt", epochs=1, prompt_tokens=10), ProjectionConfig(d_p=100))
    # 10 tokens x 100 dims + 100 x 5 head weights + 5 biases
    assert trainable_param_count(model) == 1505


def test_prompt_tokens_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((4, 3))
    tokens = Param(0.1 * rng.standard_normal((2, 3)), name="tokens")

    def loss():
        return apply_prompt(Tensor(x.copy()), tokens).square().sum()

    l = loss()
    l.backward()
    got = tokens.grad.copy()
    want = finite_diff_grad(lambda: float(loss().data), tokens.data)
    assert rel_err(got, want) < 1e-5


# --------------------------------------------------------------------- metrics

def test_accuracy_and_f1_hand_confusion_matrix():
    y_true = np.array([0, 0, 1, 1, 2, 2])
    y_pred = np.array([0, 1, 1, 1, 2, 0])
    assert accuracy(y_true, y_pred) == pytest.approx(4 / 6)
    # class 0: tp=1 fp=1 fn=1 -> f1 = 2/4; class 1: tp=2 fp=1 fn=0 -> 4/5
    # class 2: tp=1 fp=0 fn=1 -> 2/3
    want = np.mean([0.5, 0.8, 2 / 3])
    assert macro_f1(y_true, y_pred, 3) == pytest.approx(want, abs=1e-12)


def brute_auc(scores, positives):
    pos = scores[positives]
    neg = scores[~positives]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else (0.5 if p == q else 0.0)
    return total / (pos.size * neg.size)


@pytest.mark.parametrize("seed", range(10))
def test_binary_auc_matches_pairwise_oracle_with_ties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 30))
    scores = rng.integers(0, 5, size=n).astype(float)  # many ties
    positives = rng.random(n) < 0.5
    if positives.all() or not positives.any():
        positives[0] = ~positives[0]
    assert binary_auc(scores, positives) == pytest.approx(
        brute_auc(scores, positives), abs=1e-12)


def test_perfect_and_degenerate_auc():
    scores = np.array([0.1, 0.2, 0.8, 0.9])
    positives = np.array([False, False, True, True])
    assert binary_auc(scores, positives) == 1.0
    assert binary_auc(scores[::-1], positives) == 0.0
    assert np.isnan(binary_auc(scores, np.zeros(4, bool)))


def test_macro_ovr_auc_perfect_classifier():
    y = np.array([0, 1, 2, 0, 1, 2])
    scores = np.eye(3)[y] + 0.01
    assert macro_ovr_auc(y, scores) == 1.0


def test_evaluate_unknown_split_rejected():
    g = target_graph()
    task = build_fewshot_task(g, 1, seed=0)
    enc = pretrained_encoder()
    model = finetune(enc, task, TransferConfig(epochs=1), ProjectionConfig(d_p=8))
    with pytest.raises(errors.InvalidArgument):
        evaluate_model(model, task, "dev")


def test_transfer_config_validation():
    with pytest.raises(errors.InvalidArgument):
        TransferConfig(mode="linearprobe")
    with pytest.raises(errors.InvalidArgument):
        TransferConfig(epochs=0)
