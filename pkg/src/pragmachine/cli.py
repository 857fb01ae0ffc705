"""Command-line pipeline: data generation, training, inference, evaluation,
gradient audits, a demo table, and the game server.

Every command that writes artifacts also writes a RunManifest next to its
primary output; `rerun --manifest` replays the stored arguments, which
reproduces outputs bit-identically within one build. All randomness flows
from explicit seeds recorded in the manifest.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, corpus, evaluation, gdprag, lexicon, training
from .agents import build_agent
from .color import ColorLuv, DEFAULT_CONDITION_THRESHOLD
from .manifest import RunManifest
from .rsa import uniform_prior
from .validation import DataError, NumericalError, parse_color

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _setup_logging() -> None:
    level = os.environ.get("PRAGMACHINE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _manifest_path(primary_output: str | Path) -> Path:
    p = Path(primary_output)
    return p.with_name(p.name + ".manifest.json")


def _emit_manifest(command: str, args: dict, seed, inputs: list[str], outputs: list[str],
                   path: str | Path) -> None:
    man = RunManifest(command=command, args=args, seed=seed, package_version=__version__)
    for inp in inputs:
        man.add_input(inp)
    man.outputs = [str(o) for o in outputs]
    man.save(path)


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------


def _load_prototypes(path: str) -> dict[str, tuple[ColorLuv, float]]:
    table: dict[str, tuple[ColorLuv, float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                text = corpus.normalize_utterance(rec["text"])
                luv = rec["luv"]
                scale = float(rec.get("scale", corpus.DEFAULT_PROTOTYPE_SCALE))
                table[text] = (ColorLuv(float(luv[0]), float(luv[1]), float(luv[2])), scale)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"malformed prototype record at line {lineno}: {exc}") from exc
    return table


def _resolve_vocab(spec: dict) -> tuple[corpus.Vocabulary, list[str]]:
    inputs: list[str] = []
    if spec.get("path"):
        variant_map = None
        if spec.get("variant_map"):
            variant_map = corpus.load_variant_map(spec["variant_map"])
            inputs.append(spec["variant_map"])
        vocab = corpus.load_vocab(spec["path"], top_k=spec.get("top_k"), variant_map=variant_map)
        inputs.append(spec["path"])
    else:
        vocab = corpus.make_default_vocabulary(zipf_exponent=float(spec.get("zipf_exponent", 1.0)))
    return vocab, inputs


def run_gen_data(args: dict) -> int:
    with open(args["config"], "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    vocab, extra_inputs = _resolve_vocab(cfg.get("vocab", {}))
    scale = float(cfg.get("prototype_scale", corpus.DEFAULT_PROTOTYPE_SCALE))
    if cfg.get("prototypes"):
        prototype_table = _load_prototypes(cfg["prototypes"])
        extra_inputs.append(cfg["prototypes"])
        missing = [e.text for e in vocab.entries if e.text not in prototype_table]
        if missing:
            raise DataError("prototype file missing entries: " + ", ".join(missing))
    else:
        prototype_table = corpus.default_prototype_table(vocab, scale=scale)

    synth = corpus.SyntheticConfig(
        n_games=int(cfg["n_games"]),
        rounds_per_game=int(cfg["rounds_per_game"]),
        vocab=vocab,
        prototype_table=prototype_table,
        speaker_alpha=float(cfg.get("speaker_alpha", 1.5)),
        noise_eps=float(cfg.get("noise_eps", 0.05)),
        seed=int(cfg.get("seed", 0)),
        threshold=float(cfg.get("threshold", DEFAULT_CONDITION_THRESHOLD)),
        use_cost=bool(cfg.get("use_cost", True)),
    )
    rounds = corpus.generate_synthetic(synth)
    ratios = tuple(cfg.get("ratios", (0.8, 0.1, 0.1)))
    rounds = corpus.split_corpus(rounds, ratios=ratios, seed=int(cfg.get("split_seed", synth.seed)))

    out = Path(args["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save_corpus(rounds, vocab, out)
    outputs = [str(out)]
    vocab_out = args.get("vocab_out")
    if vocab_out:
        corpus.save_vocab(vocab, vocab_out)
        outputs.append(str(vocab_out))
    _emit_manifest("gen-data", args, synth.seed, [args["config"], *extra_inputs],
                   outputs, _manifest_path(out))
    print(f"wrote {len(rounds)} rounds over {synth.n_games} games to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train-lexicon
# ---------------------------------------------------------------------------


def _load_vocab_costs(vocab_path: str) -> tuple[corpus.Vocabulary, corpus.CostTable]:
    vocab = corpus.load_vocab(vocab_path)
    return vocab, corpus.cost_from_frequency(vocab)


def _initial_params(args: dict, vocab: corpus.Vocabulary) -> tuple[lexicon.LexiconParams, list[str]]:
    spec = args["embeddings"]
    inputs: list[str] = []
    if spec.startswith("random:"):
        try:
            emb_seed = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise DataError(f"--embeddings random:SEED needs an integer seed, got {spec!r}") from exc
        emb = lexicon.init_embeddings(vocab, seed=emb_seed, d=int(args["dim"]))
    else:
        emb = lexicon.init_embeddings(vocab, path=spec)
        inputs.append(spec)
    params = lexicon.init_lexicon_params(
        vocab, hidden=int(args["hidden"]), seed=int(args["seed"]), embeddings=emb)
    return params, inputs


def run_train_lexicon(args: dict) -> int:
    vocab, costs = _load_vocab_costs(args["vocab"])
    loaded = corpus.load_corpus(args["corpus"], vocab)
    train_rounds = corpus.filter_split(loaded.rounds, corpus.Split.TRAIN)
    val_rounds = corpus.filter_split(loaded.rounds, corpus.Split.VAL)
    if not train_rounds:
        raise DataError("corpus has no train-split rounds")

    p0, extra_inputs = _initial_params(args, vocab)
    cfg = training.TrainConfig(
        lr=float(args["lr"]),
        batch_size=int(args["batch_size"]),
        epochs=int(args["epochs"]),
        patience=int(args["patience"]),
        seed=int(args["seed"]),
        optimizer=args["optimizer"],
    )
    if args["mode"] == "decontextualized":
        params, history = training.train_lexicon_decontextualized(
            train_rounds, val_rounds, vocab, costs, p0, cfg)
    elif args["mode"] == "supervised":
        params, history = training.train_sl_supervised(
            train_rounds, val_rounds, vocab, costs, p0, float(args["alpha"]), cfg)
    else:
        raise DataError(f"unknown training mode {args['mode']!r}")

    out = Path(args["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    lexicon.save_params(params, out)
    outputs = [str(out)]
    if args.get("history"):
        training.save_history(history, args["history"])
        outputs.append(args["history"])
    _emit_manifest("train-lexicon", args, cfg.seed,
                   [args["corpus"], args["vocab"], *extra_inputs], outputs, _manifest_path(out))
    last = history[-1] if history else None
    print(f"trained {args['mode']} lexicon over {len(train_rounds)} rounds "
          f"({len(history)} epochs run"
          + (f", final val_ll {last.val_ll:.5f}" if last else "") + f"); wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# prag
# ---------------------------------------------------------------------------


def _agent_overrides(args: dict) -> dict:
    over = {"alpha": float(args["alpha"]), "use_cost": not args.get("no_cost", False)}
    if args["model"] == "gd":
        over.update(steps=int(args["steps"]), lr=float(args["lr"]),
                    objective=args["objective"], seed=int(args.get("seed", 0)))
    return over


def run_prag(args: dict) -> int:
    vocab, costs = _load_vocab_costs(args["vocab"])
    params = lexicon.load_params(args["params"])
    loaded = corpus.load_corpus(args["corpus"], vocab)
    rounds = loaded.rounds
    if args.get("split"):
        rounds = corpus.filter_split(rounds, corpus.Split(args["split"]))
    if not rounds:
        raise DataError("no rounds selected")

    agent = build_agent(args["model"], _agent_overrides(args))
    agent.fit(vocab=vocab, costs=costs, lexicon_params=params)

    out = args.get("out")
    trace_path = args.get("trace")
    want_trace = trace_path is not None
    jobs = int(args.get("jobs", 1))
    if jobs == 1 or len(rounds) < 64:
        records = [_prag_round_record(agent, r, vocab, args, want_trace) for r in rounds]
    else:
        from joblib import Parallel, delayed

        records = Parallel(n_jobs=jobs)(
            delayed(_prag_round_record)(agent, r, vocab, args, want_trace) for r in rounds)

    outputs = []
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for rec, _ in records:
                fh.write(json.dumps(rec) + "\n")
        outputs.append(out)
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            for rec, trace in records:
                fh.write(json.dumps({
                    "game_id": rec["game_id"], "round_idx": rec["round_idx"],
                    "trace": trace}) + "\n")
        outputs.append(trace_path)
    if out:
        _emit_manifest("prag", args, args.get("seed"),
                       [args["corpus"], args["vocab"], args["params"]],
                       outputs, _manifest_path(out))
    print(f"ran model {args['model']} over {len(rounds)} rounds")
    return EXIT_OK


def _prag_round_record(agent, r, vocab, args, want_trace):
    speaker, listener = agent.matrices(r.context)
    rec = {
        "game_id": r.game_id,
        "round_idx": r.round_index,
        "condition": r.condition.value,
        "listener_dist": listener[r.utterance_id].tolist(),
        "listener_argmax": int(np.argmax(listener[r.utterance_id])),
        "speaker_argmax": int(np.argmax(speaker[r.target_index])),
        "target": r.target_index,
        "human_choice": r.listener_choice,
        "utterance": vocab.entries[r.utterance_id].text,
    }
    trace = [t.to_dict() for t in _round_trace(agent, r, args)] if want_trace else []
    return rec, trace


def _round_trace(agent, r, args):
    from . import rsa as _rsa
    if args["model"] == "gd":
        return agent.optimize(r.context).trace
    if args["model"] in ("am", "sl"):
        cl = lexicon.context_lexicon(agent.params_, r.context)
        cfg = _rsa.RsaConfig(alpha=agent.alpha, t=agent.t, use_cost=agent.use_cost)
        return _rsa.run_am(cl.values, uniform_prior(3), agent.kappa_, cfg).trace
    return []


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def run_eval(args: dict) -> int:
    model_names = [m.strip() for m in args["models"].split(",") if m.strip()]
    vocab, costs = _load_vocab_costs(args["vocab"])
    params = lexicon.load_params(args["params"])
    sl_params = None
    if "sl" in model_names:
        if not args.get("sl_params"):
            raise DataError("missing artifact: sl lexicon (--sl-params)")
        sl_params = lexicon.load_params(args["sl_params"])
    loaded = corpus.load_corpus(args["corpus"], vocab)
    rounds = loaded.rounds
    if args.get("split"):
        rounds = corpus.filter_split(rounds, corpus.Split(args["split"]))
    if not rounds:
        raise DataError("no rounds selected for evaluation")

    report_dir = Path(args["report"])
    report_dir.mkdir(parents=True, exist_ok=True)
    jobs = int(args.get("jobs", 1))
    n_seeds = int(args.get("seeds", 1))
    base_seed = int(args.get("seed", 0))

    per_seed_acc: dict[str, list[float]] = {m: [] for m in model_names}
    first_report = None
    first_rows = None
    for k in range(n_seeds):
        agents = {}
        for name in model_names:
            over = {"alpha": float(args["alpha"]), "use_cost": not args.get("no_cost", False)}
            if name == "gd":
                over.update(steps=int(args["steps"]), lr=float(args["lr"]),
                            objective=args["objective"], seed=base_seed + k)
            agent = build_agent(name, over)
            agent.fit(vocab=vocab, costs=costs,
                      lexicon_params=sl_params if name == "sl" else params)
            agents[name] = agent
        report, per_round = evaluation.evaluate_models(agents, rounds, jobs=jobs)
        if k == 0:
            first_report, first_rows = report, per_round
        for name in model_names:
            row = report.row(name, "all", "overall")
            per_seed_acc[name].append(1.0 - row.listener_error_rate)

    summary_path = report_dir / "report.json"
    per_round_path = report_dir / "per_round.csv"
    evaluation.emit_report(first_report, first_rows, summary_path, per_round_path)
    seeds_doc = {
        name: {
            "mean_accuracy": float(np.mean(vals)),
            "sd_accuracy": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            "values": vals,
        }
        for name, vals in per_seed_acc.items()
    }
    seeds_path = report_dir / "seeds_summary.json"
    seeds_path.write_text(json.dumps(seeds_doc, indent=2) + "\n", encoding="utf-8")
    inputs = [args["corpus"], args["vocab"], args["params"]]
    if args.get("sl_params"):
        inputs.append(args["sl_params"])
    _emit_manifest("eval", args, base_seed, inputs,
                   [str(summary_path), str(per_round_path), str(seeds_path)],
                   report_dir / "manifest.json")
    for name in model_names:
        stats = seeds_doc[name]
        print(f"{name}: accuracy {stats['mean_accuracy']:.4f}"
              + (f" +/- {stats['sd_accuracy']:.4f} over {n_seeds} seeds" if n_seeds > 1 else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def run_gradcheck(args: dict) -> int:
    n_utt = int(args["vocab_size"])
    seed = int(args["seed"])
    h = float(args["h"])
    tol = float(args["tol"])
    objectives = ("le", "rd") if args["objective"] == "both" else (args["objective"],)
    cost_modes = {"true": (True,), "false": (False,), "both": (False, True)}[args["use_cost"]]
    alphas = [float(a) for a in str(args["alpha"]).split(",")]

    rng = np.random.default_rng(seed)
    worst = None
    for i in range(int(args["instances"])):
        values = rng.uniform(0.05, 0.95, size=(3, n_utt))
        cl = lexicon.ContextLexicon.from_values(values)
        kappa = rng.uniform(0.0, 2.0, size=n_utt)
        lp, sp = gdprag.init_gd_params(n_utt, seed=seed + i, init_range=0.01)
        for _, arr in (*lp.blocks(), *sp.blocks()):
            arr += rng.uniform(-0.3, 0.3, size=arr.shape)
        for objective in objectives:
            for alpha in alphas:
                for use_cost in cost_modes:
                    res = gdprag.finite_diff_check(
                        objective, lp, sp, cl, uniform_prior(3), kappa, alpha, use_cost, h)
                    if worst is None or res.max_rel_error > worst.max_rel_error:
                        worst = res
    print(f"gradcheck: {worst}")
    if worst.max_rel_error > tol:
        print(f"FAIL: exceeds tolerance {tol}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"PASS: within tolerance {tol}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# demo
# ---------------------------------------------------------------------------


def run_demo(args: dict) -> int:
    vocab, costs = _load_vocab_costs(args["vocab"])
    params = lexicon.load_params(args["params"])
    parts = [p.strip() for p in args["context"].split(",")]
    if len(parts) != 3:
        raise DataError("--context needs exactly 3 comma-separated colors")
    ctx = tuple(parse_color(p)[0] for p in parts)
    target = int(args["target"])
    if target not in (0, 1, 2):
        raise DataError("--target must be 0, 1 or 2")
    top = int(args["top"])

    models = ["base", "am", "gd"]
    lexicons = {"base": params, "am": params, "gd": params}
    if args.get("sl_params"):
        models.append("sl")
        lexicons["sl"] = lexicon.load_params(args["sl_params"])

    print(f"context: {args['context']}  target: {target}")
    for name in models:
        over = {"alpha": float(args["alpha"])}
        if name == "gd":
            over.update(steps=int(args["steps"]), lr=float(args["lr"]),
                        objective="le", seed=int(args.get("seed", 0)))
        agent = build_agent(name, over)
        agent.fit(vocab=vocab, costs=costs, lexicon_params=lexicons[name])
        dist = agent.speaker_proba(ctx, target)
        order = np.argsort(-dist)[:top]
        ranked = ", ".join(f"{vocab.entries[u].text} ({dist[u]:.3f})" for u in order)
        print(f"{name:>5} speaker: {ranked}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def run_serve(args: dict) -> int:
    import uvicorn

    from .server import ServerArtifacts, create_app

    artifacts = ServerArtifacts.load(
        vocab_path=args["vocab"],
        params_path=args["params"],
        sl_params_path=args.get("sl_params"),
        threshold=float(args["threshold"]),
        seed=int(args.get("seed", 0)),
    )
    app = create_app(artifacts, static_dir=args.get("static"))
    uvicorn.run(app, host=args["host"], port=int(args["port"]), log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# rerun
# ---------------------------------------------------------------------------

_RUNNERS = {}


def run_rerun(args: dict) -> int:
    man = RunManifest.load(args["manifest"])
    stale = man.verify_inputs()
    if stale:
        raise DataError("manifest inputs changed on disk: " + ", ".join(stale))
    runner = _RUNNERS.get(man.command)
    if runner is None:
        raise DataError(f"manifest names unknown command {man.command!r}")
    logger.info("re-running %s from %s", man.command, args["manifest"])
    return runner(man.args)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="pragmachine",
        description="Pragmatic reference-game agents: data, training, inference, evaluation, server.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=f"pragmachine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic reference-game corpus", formatter_class=fmt)
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--out", required=True, help="output corpus JSONL path")
    p.add_argument("--vocab-out", default=None, help="also write the vocabulary TSV here")

    p = sub.add_parser("train-lexicon", help="train lexicon parameters", formatter_class=fmt)
    p.add_argument("--mode", choices=["decontextualized", "supervised"], required=True)
    p.add_argument("--corpus", required=True, help="corpus JSONL path")
    p.add_argument("--vocab", required=True, help="vocabulary TSV path")
    p.add_argument("--embeddings", required=True,
                   help="embedding JSONL path, or random:SEED for seeded fallback")
    p.add_argument("--out", required=True, help="output params JSON path")
    p.add_argument("--history", default=None, help="write epoch,train_ll,val_ll CSV here")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--alpha", type=float, default=1.17, help="pragmatic alpha (supervised mode)")
    p.add_argument("--hidden", type=int, default=32, help="scoring network hidden units")
    p.add_argument("--dim", type=int, default=50, help="embedding dimension for random init")

    p = sub.add_parser("prag", help="run a pragmatic agent over a corpus split", formatter_class=fmt)
    p.add_argument("--model", choices=["base", "am", "gd"], required=True)
    p.add_argument("--objective", choices=["le", "rd"], default="le")
    p.add_argument("--alpha", type=float, default=1.17)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--lr", type=float, default=0.357)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default=None)
    p.add_argument("--out", default=None, help="per-round predictions JSONL")
    p.add_argument("--trace", default=None, help="per-round objective trace JSONL")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-cost", action="store_true", help="drop the cost term from utilities")
    p.add_argument("--jobs", type=int, default=-1, help="worker count (-1 = all cores)")

    p = sub.add_parser("eval", help="evaluate models against a corpus", formatter_class=fmt)
    p.add_argument("--models", default="base,am,gd", help="comma list from base,am,gd,sl")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--params", required=True, help="lexicon params for base/am/gd")
    p.add_argument("--sl-params", default=None, help="supervised lexicon params for sl")
    p.add_argument("--report", required=True, help="output report directory")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds (mean +/- sd)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--alpha", type=float, default=1.17)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--lr", type=float, default=0.357)
    p.add_argument("--objective", choices=["le", "rd"], default="le")
    p.add_argument("--no-cost", action="store_true")
    p.add_argument("--jobs", type=int, default=-1, help="worker count (-1 = all cores)")

    p = sub.add_parser("gradcheck", help="finite-difference audit of analytic gradients",
                       formatter_class=fmt)
    p.add_argument("--objective", choices=["le", "rd", "both"], required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--alpha", default="1.17", help="comma list of alpha values")
    p.add_argument("--use-cost", choices=["true", "false", "both"], default="both")
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-5)

    p = sub.add_parser("demo", help="compare model speaker choices for one context",
                       formatter_class=fmt)
    p.add_argument("--context", required=True, help="three comma-separated colors, e.g. '#aa8455,#884db3,#876e91'")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--sl-params", default=None)
    p.add_argument("--alpha", type=float, default=1.17)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--lr", type=float, default=0.357)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=int, default=5)

    p = sub.add_parser("serve", help="run the game server", formatter_class=fmt)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--vocab", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--sl-params", default=None)
    p.add_argument("--static", default=None, help="serve this directory at / (playground build)")
    p.add_argument("--threshold", type=float, default=DEFAULT_CONDITION_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("rerun", help="re-run a command from its manifest", formatter_class=fmt)
    p.add_argument("--manifest", required=True)

    return parser


_RUNNERS.update({
    "gen-data": run_gen_data,
    "train-lexicon": run_train_lexicon,
    "prag": run_prag,
    "eval": run_eval,
    "gradcheck": run_gradcheck,
    "demo": run_demo,
    "serve": run_serve,
    "rerun": run_rerun,
})


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    ns = parser.parse_args(argv)
    args = {k: v for k, v in vars(ns).items() if k != "command"}
    try:
        return _RUNNERS[ns.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
