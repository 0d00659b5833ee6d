"""Command-line front end: one binary with subcommands for every pipeline stage.

Exit codes: 0 on success, 1 on validation/schema problems in the inputs, and
2 on I/O or scoring-service failures.  Every invocation ends with a single
machine-readable JSON summary line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .arrange import arrange, validate
from .corpus import toy_corpus
from .dpo import TabularPolicy, observed_vocab, trace_csv, train
from .errors import JudgeUnavailable, OracleUnavailable, SchemaError, StreamcotError
from .io import (
    FORMAT_VERSION,
    arrangement_to_dict,
    config_from_dict,
    read_jsonl,
    sample_from_dict,
    sample_to_dict,
    write_jsonl,
    write_text,
)
from .oracle import RemoteOracle, ToyTabularLm
from .prefs import PreferencePair, curate_correctness, curate_length, sample_generations
from .qc import completeness_batch, shift_sample
from .simulate import (
    ForceDecodeConfig,
    NoisyReplay,
    ScriptedReplay,
    fitted_policy,
    run,
    sweep,
    sweep_csv,
)
from .types import Sample

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _summary(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _read_samples(path: str) -> list[Sample]:
    samples = []
    for lineno, obj in read_jsonl(path):
        try:
            samples.append(sample_from_dict(obj))
        except (SchemaError, ValueError) as exc:
            raise SchemaError(f"line {lineno}: {exc}") from exc
    if not samples:
        raise SchemaError(f"no sample records in {path}")
    return samples


def _sample_vocab(samples: Sequence[Sample]) -> list[int]:
    vocab: set[int] = set()
    for s in samples:
        vocab.update(s.question_pieces(s.n_words))
        vocab.update(s.reasoning_pieces)
        vocab.update(s.answer_pieces())
    return sorted(vocab)


def _make_oracle(args: argparse.Namespace, samples: Sequence[Sample]):
    if args.oracle == "remote":
        return RemoteOracle(url=args.oracle_url)
    rng = np.random.default_rng(args.seed)
    return ToyTabularLm.random(_sample_vocab(samples), rng)


def _add_oracle_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--oracle", choices=("toy", "remote"), default="toy",
                     help="scoring backend (toy tabular model or HTTP service)")
    sub.add_argument("--oracle-url", default=None,
                     help="scoring service URL (or set ORACLE_URL)")
    sub.add_argument("--kl-mode", choices=("positionwise", "bernoulli"),
                     default="positionwise")


def cmd_make_corpus(args: argparse.Namespace) -> dict[str, Any]:
    samples = toy_corpus(n=args.n, seed=args.seed)
    count = write_jsonl(args.out, (sample_to_dict(s) for s in samples), kind="samples")
    return {"written": count, "out": args.out}


def cmd_arrange(args: argparse.Namespace) -> dict[str, Any]:
    samples = _read_samples(getattr(args, "in"))
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = config_from_dict(json.load(fh))
    else:
        config = config_from_dict(
            {
                "asr_mode": args.asr_mode,
                "lookahead": args.k,
                "cot_mode": args.cot_mode,
                "cot_onset": "at_word" if args.onset is not None else "end_of_question",
                "onset_word": args.onset,
                "interleave": args.interleave,
            }
        )
    records = []
    violations = 0
    for i, sample in enumerate(samples):
        config.validate(sample.n_words)
        arr = arrange(sample, config)
        problems = validate(arr)
        if problems:
            violations += 1
            raise StreamcotError(f"sample {i}: arrangement violations: {problems}")
        records.append(arrangement_to_dict(arr))
    count = write_jsonl(args.out, records, kind="arrangements")
    return {"read": len(samples), "written": count, "violations": violations}


def cmd_qc(args: argparse.Namespace) -> dict[str, Any]:
    samples = _read_samples(getattr(args, "in"))
    oracle = _make_oracle(args, samples)
    curves = completeness_batch(
        samples, oracle, theta=args.theta, kl_mode=args.kl_mode, jobs=args.jobs
    )
    records = []
    for i, (sample, curve) in enumerate(zip(samples, curves)):
        records.append(
            {
                "sample": i,
                "zeta": list(curve.zeta),
                "kl_to_full": [None if k == float("inf") else k for k in curve.kl_to_full],
                "theta": curve.theta,
                "inflection": curve.inflection,
                "n_words": sample.n_words,
            }
        )
    count = write_jsonl(args.out, records, kind="qc")
    if args.csv:
        lines = ["sample,word_index,word_text,zeta"]
        for i, (sample, curve) in enumerate(zip(samples, curves)):
            texts = [""] + [w.text for w in sample.question_words]
            for p, z in enumerate(curve.zeta):
                lines.append(f"{i},{p},{texts[p]},{z:.8g}")
        write_text(args.csv, "\n".join(lines) + "\n")
    if args.plot:
        from .plotting import plot_qc_curve

        plot_qc_curve(curves[0], args.plot, samples[0])
    mean_inflection = float(np.mean([c.inflection for c in curves]))
    return {"read": len(samples), "written": count, "mean_inflection": mean_inflection}


def cmd_prefs(args: argparse.Namespace) -> dict[str, Any]:
    samples = _read_samples(getattr(args, "in"))
    oracle = _make_oracle(args, samples)
    curves = completeness_batch(
        samples, oracle, theta=args.theta, kl_mode=args.kl_mode, jobs=args.jobs
    )
    curate = curate_correctness if args.basis == "correctness" else curate_length
    pairs: list[PreferencePair] = []
    skipped = 0
    for i, (sample, curve) in enumerate(zip(samples, curves)):
        gt_config = shift_sample(sample, curve, lookahead=args.k)
        gt_arr = arrange(sample, gt_config)
        piece_vocab = _sample_vocab([sample])
        policy = NoisyReplay(
            gt_arr,
            piece_vocab,
            p_extend=args.noise,
            p_skip=args.noise,
            p_corrupt=args.noise * 2,
        )
        records = sample_generations(
            policy,
            sample,
            k=args.k_candidates,
            onset_word=curve.inflection,
            prompt_id=str(i),
            lookahead=args.k,
            base_seed=args.seed + i * 1000,
        )
        pair = curate(records)
        if pair is None:
            skipped += 1
            continue
        pairs.append(pair)
    count = write_jsonl(args.out, (p.to_dict() for p in pairs), kind="pairs")
    return {"read": len(samples), "written": count, "skipped": skipped}


def cmd_dpo(args: argparse.Namespace) -> dict[str, Any]:
    pairs = []
    for lineno, obj in read_jsonl(args.pairs):
        try:
            pairs.append(PreferencePair.from_dict(obj))
        except (SchemaError, ValueError) as exc:
            raise SchemaError(f"line {lineno}: {exc}") from exc
    if not pairs:
        raise SchemaError(f"no preference pairs in {args.pairs}")
    arrangements = []
    for p in pairs:
        arrangements.extend((p.chosen.arrangement, p.rejected.arrangement))
    vocab = observed_vocab(arrangements)
    policy = TabularPolicy.uniform(vocab)
    reference = policy.clone()
    trace = train(
        policy,
        reference,
        pairs,
        beta=args.beta,
        lam=getattr(args, "lambda"),
        lr=args.lr,
        steps=args.steps,
        length_normalized=args.length_norm,
    )
    if args.trace:
        write_text(args.trace, trace_csv(trace))
    final = trace[-1]
    return {
        "pairs": len(pairs),
        "steps": args.steps,
        "final_loss": final.loss,
        "final_reward_accuracy": final.reward_accuracy,
    }


def cmd_simulate(args: argparse.Namespace) -> dict[str, Any]:
    samples = _read_samples(getattr(args, "in"))
    config = config_from_dict(
        {"asr_mode": "streaming", "lookahead": args.k, "cot_mode": "text"}
    )
    records = []
    for i, sample in enumerate(samples):
        arr = arrange(sample, config)
        policy = ScriptedReplay(arr) if args.policy == "scripted" else fitted_policy(arr)
        hooks = ForceDecodeConfig(
            lookahead=args.k,
            force_cot_at_end=args.force_cot_at_end or args.policy == "toy",
            budget=args.budget,
        )
        result = run(sample, policy, hooks, seed=args.seed + i)
        records.append(
            {
                "sample": i,
                "latency_tokens": result.metrics.latency_tokens,
                "cot_length": result.metrics.cot_length,
                "wer": result.metrics.wer,
                "correctness": result.metrics.correctness,
                "budget_exceeded": result.budget_exceeded,
                "transcript": result.transcript,
            }
        )
    count = write_jsonl(args.out, records, kind="runs")
    return {"read": len(samples), "written": count}


def cmd_sweep(args: argparse.Namespace) -> dict[str, Any]:
    samples = _read_samples(getattr(args, "in"))
    oracle = _make_oracle(args, samples)
    rows = sweep(
        samples,
        oracle,
        thetas=args.thetas,
        ws_counts=args.ws,
        lookahead=args.k,
        kl_mode=args.kl_mode,
        budget=args.budget,
    )
    write_text(args.out, sweep_csv(rows))
    if args.svg:
        from .plotting import plot_sweep

        plot_sweep(rows, args.svg)
    return {"read": len(samples), "rows": len(rows), "out": args.out}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamcot",
        description="Three-stream arrangement, completeness, preference, and "
        "simulation tooling for think-while-listening dialogue data.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"streamcot {__version__} (format {FORMAT_VERSION})",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        sub.add_argument("-k", "--k", type=int, default=6,
                         help="streaming ASR look-ahead in frames")

    p = subs.add_parser("make-corpus", help="write a deterministic toy corpus")
    common(p)
    p.add_argument("--n", type=int, default=25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_corpus)

    p = subs.add_parser("arrange", help="compile samples into stream arrangements")
    common(p)
    p.add_argument("--config", default=None, help="JSON arrangement config file")
    p.add_argument("--asr-mode", choices=("none", "streaming", "offline"),
                   default="streaming")
    p.add_argument("--cot-mode", choices=("none", "text", "spoken"), default="text")
    p.add_argument("--onset", type=int, default=None,
                   help="start the CoT at this word index (default: question end)")
    p.add_argument("--interleave", action="store_true")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_arrange)

    p = subs.add_parser("qc", help="question-completeness curves and onsets")
    common(p)
    _add_oracle_flags(p)
    p.add_argument("--theta", type=float, default=0.95)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None, help="also write per-word curve rows")
    p.add_argument("--plot", default=None, help="render the first curve to this file")
    p.set_defaults(func=cmd_qc)

    p = subs.add_parser("prefs", help="rejection-sample and curate preference pairs")
    common(p)
    _add_oracle_flags(p)
    p.add_argument("--basis", choices=("correctness", "length"), default="correctness")
    p.add_argument("--k-candidates", type=int, default=4, metavar="K",
                   help="candidates per prompt")
    p.add_argument("--theta", type=float, default=0.95)
    p.add_argument("--noise", type=float, default=0.15,
                   help="mutation rate of the candidate sampler")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prefs)

    p = subs.add_parser("dpo", help="train the preference objective on curated pairs")
    common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda", type=float, default=0.1, dest="lambda")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--length-norm", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--trace", default=None, help="write a per-step CSV trace")
    p.set_defaults(func=cmd_dpo)

    p = subs.add_parser("simulate", help="frame-synchronous decoding runs")
    common(p)
    p.add_argument("--policy", choices=("scripted", "toy"), default="scripted")
    p.add_argument("--force-cot-at-end", action="store_true",
                   help="force the CoT opener right after the question if missing")
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("sweep", help="latency/accuracy table over onset policies")
    common(p)
    _add_oracle_flags(p)
    p.add_argument("--thetas", type=float, nargs="+",
                   default=[0.95, 0.85, 0.75, 0.65])
    p.add_argument("--ws", type=int, nargs="*", default=[],
                   help="fixed word-shift baseline counts")
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--svg", default=None, help="render the curves to this figure file")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func: Callable[[argparse.Namespace], dict[str, Any]] = args.func
    try:
        payload = func(args)
    except (OracleUnavailable, JudgeUnavailable, OSError) as exc:
        _summary({"status": "error", "command": args.command, "error": str(exc)})
        return EXIT_IO
    except (StreamcotError, ValueError) as exc:
        _summary({"status": "error", "command": args.command, "error": str(exc)})
        return EXIT_VALIDATION
    payload.update({"status": "ok", "command": args.command})
    _summary(payload)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
