"""Acceptance suite. Each test prints one ``criterion N ... PASS|FAIL`` line
(visible without ``-s``) and then asserts."""

import itertools
import json
import time

import numpy as np
import pytest

import naive
from conftest import random_bank
from mdnre import experiments, synthgen
from mdnre.baselines import fit_linear, predict_linear, single_reference_nre
from mdnre.cli import main as cli_main
from mdnre.core import classify, expression_activity
from mdnre.experiments import ExperimentConfig
from mdnre.frames import ReferenceFrame, infer_domain
from mdnre.io import dumps_dataset, load_dataset, save_dataset
from mdnre.training import (
    first_templates,
    fit_references,
    fit_with_templates,
    optimize_templates,
    select_neutrals,
    train,
)


def _line(capsys, n, title, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {n} {title} ... {'PASS' if ok else 'FAIL'} {detail}".rstrip())


def _target_expressions(data):
    return (data.domains == "target") & (data.labels != "neutral")


def _frames_of(pool):
    return fit_references([(pool.X[i], d) for d, i in select_neutrals(pool).items()])


def test_criterion_1_perfect_transfer(capsys):
    t0 = time.perf_counter()
    data, _ = synthgen.generate(synthgen.bfs_spec())
    pool = data.subset(synthgen.bfs_training_split(data, "human"))
    model, choice = train(pool, source_domain="human")
    pred = model.predict(data.X)
    elapsed = time.perf_counter() - t0
    per_domain = {d: float(np.mean(pred[data.domains == d] == data.labels[data.domains == d]))
                  for d in data.domain_labels}
    ok = (len(data) == 105 and choice.n_images == 9 and len(choice.neutrals) == 3
          and all(v == 1.0 for v in per_domain.values()) and elapsed < 1.0)
    _line(capsys, 1, "perfect transfer", ok, f"{per_domain} in {elapsed:.3f}s")
    assert ok


def test_criterion_2_baseline_failure_geometry(capsys):
    col, _ = synthgen.fig3_instance("collinear")
    tgt = _target_expressions(col)
    linear = fit_linear(col.subset(col.domains == "source"))
    lin_acc = float(np.mean(predict_linear(linear, col.X[tgt]) == col.labels[tgt]))
    model, _ = train(col, source_domain="source")
    md_acc = float(np.mean(model.predict(col.X[tgt]) == col.labels[tgt]))

    mis, _ = synthgen.fig3_instance("misaligned", phi=np.pi)
    tgt_m = _target_expressions(mis)
    model_m, _ = train(mis, source_domain="source")
    mis_acc = float(np.mean(model_m.predict(mis.X[tgt_m]) == mis.labels[tgt_m]))

    ok = lin_acc == 0.0 and md_acc == 1.0 and mis_acc == 0.0
    _line(capsys, 2, "baseline failure geometry", ok,
          f"linear={lin_acc} mdnre={md_acc} misaligned={mis_acc}")
    assert ok


def test_criterion_3_ablation_ordering(capsys):
    spec = synthgen.fig3_spec("collinear")
    t_norm = float(np.linalg.norm(spec.domains[1].translation))
    e_max = max(float(np.linalg.norm(c.displacement, axis=1).max()) for c in spec.classes)
    data, _ = synthgen.generate(spec)
    tgt = data.domains == "target"
    model, _ = train(data, source_domain="source")
    full = float(np.mean(model.predict(data.X[tgt]) == data.labels[tgt]))
    single = float(np.mean(single_reference_nre(data, data.X[tgt], "source")
                           == data.labels[tgt]))
    ok = t_norm >= 2 * e_max and single < full
    _line(capsys, 3, "ablation ordering", ok,
          f"|t|={t_norm:.3f} 2max|e|={2 * e_max:.3f} single={single:.3f} full={full:.3f}")
    assert ok


def test_criterion_4_strength_linearity(capsys):
    rep = experiments.run_strength(ExperimentConfig(preset="bfsl"))
    worst = 0.0
    for stats in rep.linearity.values():
        worst = max(worst, abs(stats["slope"] - 1), abs(stats["intercept"]),
                    abs(stats["r2"] - 1))
    linear_ok = len(rep.linearity) == 6 and worst <= 1e-9

    # noisy: mean accuracy per blend level over 20 seeds
    noisy = experiments.run_strength(ExperimentConfig(preset="bfsl", noise_sigma=0.02,
                                                      n_seeds=20))
    means = noisy.extras["seed_sweep"]["mean_accuracy"]
    levels = [means[k] for k in ("1", "0.75", "0.5", "0.25")]
    monotone = all(a >= b for a, b in zip(levels, levels[1:]))
    ok = linear_ok and monotone
    _line(capsys, 4, "strength linearity", ok,
          f"max deviation={worst:.2e} noisy per-level (1..0.25)={[round(v, 3) for v in levels]}")
    assert ok


def test_criterion_5_oracle_equivalence(capsys):
    rng = np.random.default_rng(20240531)
    act_err, cls_bad, inf_err, inf_bad = 0.0, 0, 0.0, 0
    for _ in range(1000):
        L, M = int(rng.integers(1, 11)), int(rng.integers(2, 8))
        bank = random_bank(rng, L, M)
        d = rng.standard_normal((L, 2))
        v = expression_activity(d, bank)
        act_err = max(act_err, float(np.max(np.abs(
            v - naive.activity(d.tolist(), bank.directions.tolist())))))
        theta = float(rng.uniform(0, 2))
        cls_bad += classify(v, theta, bank.neutral) != naive.classify(v.tolist(), theta,
                                                                      bank.neutral)
    for _ in range(1000):
        L, K = int(rng.integers(3, 11)), int(rng.integers(1, 5))
        frames = [ReferenceFrame(k, rng.uniform(-2, 2, (L, 2))) for k in range(K)]
        s = rng.uniform(-2, 2, (L, 2))
        idx, aligned, rho = naive.infer(s.tolist(),
                                        [(f.landmarks.tolist(), f.anchor_indices) for f in frames])
        m = infer_domain(s, frames)
        inf_bad += m.index != idx
        inf_err = max(inf_err, float(np.max(np.abs(m.aligned - np.array(aligned)))),
                      abs(m.residual - rho))
    ok = act_err <= 1e-12 and cls_bad == 0 and inf_bad == 0 and inf_err <= 1e-12
    _line(capsys, 5, "oracle equivalence", ok,
          f"activity err={act_err:.1e} classify mismatches={cls_bad} "
          f"domain mismatches={inf_bad} align err={inf_err:.1e}")
    assert ok


def test_criterion_6_similarity_invariance(capsys):
    data, _ = synthgen.generate(synthgen.bfs_spec())
    pool = data.subset(synthgen.bfs_training_split(data, "human"))
    model, _ = train(pool, source_domain="human")
    rng = np.random.default_rng(6)
    flips, worst = 0, 0.0
    for i in rng.integers(0, len(data), 100):
        s = data.X[i]
        sigma = float(rng.uniform(0.5, 2))
        t = rng.uniform(-10, 10, 2)
        moved = sigma * s + t
        flips += model.predict_index(moved[None])[0] != model.predict_index(s[None])[0]
        a, b = model.activities(s[None])[0], model.activities(moved[None])[0]
        # relative to the largest activity; all-zero vectors get an absolute floor
        scale = sigma * float(np.max(a))
        err = float(np.max(np.abs(b - sigma * a)))
        worst = max(worst, err / scale if scale > 0 else (0.0 if err <= 1e-12 else np.inf))
    ok = flips == 0 and worst <= 1e-9
    _line(capsys, 6, "similarity invariance", ok, f"flips={flips} max rel err={worst:.1e}")
    assert ok


def _margin_oracle(model, data, mask):
    """Brute-force margins with the loop oracle: positive means the decision
    rule cannot help but return the true class."""
    neutral = model.bank.neutral
    theta = model.neutral_threshold
    margins = []
    for i in range(len(data)):
        m_true = model.class_labels.index(data.labels[i])
        diffs, _ = model.difference_fields(data.X[i:i + 1])
        v = naive.activity(diffs[0].tolist(), model.bank.directions.tolist(),
                           masked=set(mask))
        rivals = [v[m] for m in range(len(v)) if m not in (neutral, m_true)]
        if m_true == neutral:
            margins.append(theta - max(v[m] for m in range(len(v)) if m != neutral))
        else:
            margins.append(v[m_true] - max([theta] + rivals))
    return np.array(margins)


@pytest.mark.parametrize("instance", ["bfs", "fig3"])
def test_criterion_7_occlusion_robustness(capsys, instance):
    if instance == "bfs":
        data, _ = synthgen.generate(synthgen.bfs_spec())
        pool = data.subset(synthgen.bfs_training_split(data, "human"))
        source = "human"
    else:
        data, _ = synthgen.fig3_instance("collinear")
        pool, source = data, "source"
    model, _ = train(pool, source_domain=source)
    expressive = experiments.expressive_landmarks(data.n_landmarks, (0, 1, 2))
    masks = [c for k in range(len(expressive) + 1)
             for c in itertools.combinations(expressive, k)]
    wrong_with_margin, clean_masks, clean_ok = 0, 0, 0
    for mask in masks:
        margins = _margin_oracle(model, data, mask)
        correct = model.predict(data.X, mask=list(mask)) == data.labels
        wrong_with_margin += int(np.sum(~correct & (margins > 0)))
        if np.all(margins > 0):
            clean_masks += 1
            clean_ok += bool(np.all(correct))
    all_masked = model.predict(data.X, mask=expressive)
    neutral_ok = bool(np.all(all_masked == "neutral"))
    ok = wrong_with_margin == 0 and clean_ok == clean_masks >= 1 and neutral_ok
    _line(capsys, 7, f"occlusion robustness [{instance}]", ok,
          f"masks={len(masks)} positive-margin masks={clean_masks} at 100%={clean_ok} "
          f"violations={wrong_with_margin} all-masked neutral={neutral_ok}")
    assert ok


def test_criterion_8_template_optimization(capsys):
    datasets = {"bfs": synthgen.generate(synthgen.bfs_spec())[0],
                "fig3-collinear": synthgen.fig3_instance("collinear")[0],
                "fig3-misaligned": synthgen.fig3_instance("misaligned")[0]}
    for seed in range(10):
        datasets[f"bfs-noisy-{seed}"] = synthgen.generate(
            synthgen.bfs_spec(seed, noise_sigma=0.05, identity_sigma=0.05))[0]
    worse = []
    for name, pool in datasets.items():
        frames = _frames_of(pool)
        first = fit_with_templates(pool, frames, first_templates(pool)).accuracy(pool)
        _, opt, _ = optimize_templates(pool, frames)
        if opt.accuracy(pool) < first:
            worse.append(name)
    pool, eval_set = synthgen.corrupted_pool(synthgen.bfs_spec(), np.pi / 2, "human")
    frames = _frames_of(pool)
    first_c = fit_with_templates(pool, frames, first_templates(pool)).accuracy(eval_set)
    _, opt_c, _ = optimize_templates(pool, frames, eval_set)
    opt_acc = opt_c.accuracy(eval_set)
    ok = not worse and opt_acc > first_c
    _line(capsys, 8, "template optimization", ok,
          f"datasets={len(datasets)} worse={worse} corrupted first={first_c:.3f} "
          f"optimized={opt_acc:.3f}")
    assert ok


def test_criterion_9_determinism_and_io(capsys, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert cli_main(["ablate", "transfer", "--seed", "11", "--noise-sigma", "0.03",
                         "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        data["metadata"].pop("timestamp")
        outs.append(json.dumps(data, sort_keys=True, indent=2).encode())
    same_report = outs[0] == outs[1]

    data, _ = synthgen.generate(synthgen.bfs_spec(seed=11, noise_sigma=0.03,
                                                  identity_sigma=0.1))
    path = tmp_path / "bfs.csv"
    save_dataset(data, path)
    back = load_dataset(path)
    twelve = np.array_equal(np.vectorize(lambda v: float(f"{v:.12g}"))(back.X),
                            np.vectorize(lambda v: float(f"{v:.12g}"))(data.X))
    lossless = back.equals(data) and twelve and dumps_dataset(back) == path.read_text()
    ok = same_report and lossless
    _line(capsys, 9, "determinism and I/O", ok,
          f"identical reports={same_report} csv round-trip={lossless}")
    assert ok
