"""Command-line entry point for every pipeline stage.

Exit codes: 0 success, 1 data error, 2 usage error. A --config file supplies
defaults that explicit flags override.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import btcorpus, corpus_io, evalharness, verify
from .bleu import corpus_bleu, tokenize_eval
from .config import RunConfig, load_config
from .errors import DataError, S2SKitError, UsageError
from .geoalign import MetricReport, dtw_pa_mpjpe
from .langs import parse_sign
from .modelio import endpoint_from_obj
from .quantize import Codebook, decode_tokens, encode_clip, train_codebook
from .records import PARTS
from .reviewserver import make_server
from .verify import ScreeningSession


def _endpoint_arg(role: str, value: str, timeout_ms: float):
    """Endpoint flags accept inline JSON or a path to a JSON file."""
    text = value.strip()
    if not text.startswith("{"):
        text = Path(value).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--{role}: malformed endpoint JSON: {exc.msg}") from None
    obj.setdefault("timeout_ms", timeout_ms)
    return endpoint_from_obj(role, obj)


def build_parser(cfg: RunConfig) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="s2skit", description=__doc__)
    parser.add_argument("--config", help="JSON config file supplying flag defaults", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="codebook training and token encode/decode")
    qsub = q.add_subparsers(dest="subcommand", required=True)
    qt = qsub.add_parser("train")
    qt.add_argument("--clips", required=True)
    qt.add_argument("--out", required=True)
    qt.add_argument("--window", type=int, default=cfg.window)
    qt.add_argument("--K", type=int, default=cfg.K)
    qt.add_argument("--max-iters", type=int, default=cfg.max_iters)
    qt.add_argument("--seed", type=int, default=cfg.seed)
    qt.add_argument("--codebook-id", default="default")
    qe = qsub.add_parser("encode")
    qe.add_argument("--clips", required=True)
    qe.add_argument("--codebook", required=True)
    qe.add_argument("--out", required=True)
    qd = qsub.add_parser("decode")
    qd.add_argument("--tokens", required=True)
    qd.add_argument("--codebook", required=True)
    qd.add_argument("--out", required=True)

    m = sub.add_parser("metric", help="pose and text metrics")
    msub = m.add_subparsers(dest="subcommand", required=True)
    mp = msub.add_parser("pa-mpjpe")
    mp.add_argument("--pred", required=True)
    mp.add_argument("--ref", required=True)
    mp.add_argument("--allow-scale", action="store_true")
    mb = msub.add_parser("bleu")
    mb.add_argument("--hyp", required=True)
    mb.add_argument("--ref", required=True)
    mb.add_argument("--lang", required=True, choices=["ASL", "CSL", "DGS"])
    mb.add_argument("--max-n", type=int, default=4, choices=[1, 2, 3, 4])
    mb.add_argument("--smoothing", default="none", choices=["none", "floor"])

    b = sub.add_parser("bt", help="back-translation corpus construction")
    bsub = b.add_subparsers(dest="subcommand", required=True)
    bb = bsub.add_parser("build")
    bb.add_argument("--gold", required=True)
    bb.add_argument("--tokens", required=True, help="gold token corpus resolving sign_ref")
    bb.add_argument("--source-lang", required=True, choices=["ASL", "CSL", "DGS"])
    bb.add_argument("--mt", required=True, help="mt endpoint spec (JSON or file)")
    bb.add_argument("--t2s", required=True, help="t2s endpoint spec (JSON or file)")
    bb.add_argument("--out", required=True)
    bb.add_argument("--on-error", default="skip_and_log", choices=list(btcorpus.ON_ERROR_MODES))
    bb.add_argument("--log", default=None, help="skip-log sidecar path (default OUT.skipped.jsonl)")
    bs = bsub.add_parser("stats")
    bs.add_argument("--pairs", required=True)
    bs.add_argument("--tokens", required=True, help="gold token corpus resolving target_ref")
    bs.add_argument("--json", action="store_true")

    v = sub.add_parser("verify", help="re-verification of noisy cross-lingual pairs")
    vsub = v.add_subparsers(dest="subcommand", required=True)
    vf = vsub.add_parser("filter")
    vf.add_argument("--candidates", required=True)
    vf.add_argument("--ratings", default=None, help="JSONL pair_id -> llm_rating score file")
    vf.add_argument("--cosines", default=None, help="JSONL pair_id -> cosine score file")
    vf.add_argument("--rating-min", type=int, default=cfg.rating_min_exclusive, help="exclusive lower bound")
    vf.add_argument("--cosine-min", type=float, default=cfg.cosine_min_exclusive, help="exclusive lower bound")
    vf.add_argument("--out", required=True)
    vf.add_argument("--log", default=None, help="rejection log path (default OUT.rejected.jsonl)")
    vs = vsub.add_parser("stats")
    vs.add_argument("--before", required=True)
    vs.add_argument("--after", required=True)
    vs.add_argument("--json", action="store_true")
    vz = vsub.add_parser("finalize")
    vz.add_argument("--pool", required=True)
    vz.add_argument("--decisions", required=True)
    vz.add_argument("--annotators", required=True, help="comma-separated pair, e.g. A,B")
    vz.add_argument("--out", required=True)

    r = sub.add_parser("review", help="manual-screening HTTP service")
    rsub = r.add_subparsers(dest="subcommand", required=True)
    rs = rsub.add_parser("serve")
    rs.add_argument("--pool", required=True)
    rs.add_argument("--annotators", required=True)
    rs.add_argument("--port", type=int, default=0)
    rs.add_argument("--decisions", default=None, help="decisions file (default POOL.decisions.jsonl)")
    rs.add_argument("--session-id", default="main")

    e = sub.add_parser("eval", help="anchor-based system evaluation")
    esub = e.add_subparsers(dest="subcommand", required=True)
    er = esub.add_parser("run")
    er.add_argument("--systems", required=True, help="JSON list of system specs")
    er.add_argument("--anchors", required=True, help="JSONL anchor sets, one direction per line")
    er.add_argument("--poses", required=True, help="pose corpus for sources and targets")
    er.add_argument("--gold", required=True, help="gold manifest supplying clip texts")
    er.add_argument("--quantizer", required=True, help="codebook file")
    er.add_argument("--s2t", required=True, help="s2t evaluator endpoint spec")
    er.add_argument("--t2s", default=None, help="shared t2s endpoint spec (synthetic mode)")
    er.add_argument("--source-mode", default="real", choices=list(evalharness.SOURCE_MODES))
    er.add_argument("--allow-scale", action="store_true")
    er.add_argument("--out", required=True, help="output directory")

    return parser


def _cmd_quantize(args) -> int:
    if args.subcommand == "train":
        clips = corpus_io.load_corpus(args.clips, "poses")
        codebook = train_codebook(
            clips,
            window=args.window,
            K=args.K,
            max_iters=args.max_iters,
            seed=args.seed,
            codebook_id=args.codebook_id,
        )
        codebook.save(args.out)
        print(f"trained codebook {codebook.codebook_id!r}: K={codebook.K}, window={codebook.window}")
    elif args.subcommand == "encode":
        clips = corpus_io.load_corpus(args.clips, "poses")
        codebook = Codebook.load(args.codebook)
        seqs = [encode_clip(c, codebook) for c in clips]
        corpus_io.save_corpus(seqs, args.out, "tokens")
        print(f"encoded {len(seqs)} clips")
    else:
        seqs = corpus_io.load_corpus(args.tokens, "tokens")
        codebook = Codebook.load(args.codebook)
        clips = [decode_tokens(s, codebook) for s in seqs]
        corpus_io.save_corpus(clips, args.out, "poses")
        print(f"decoded {len(clips)} token sequences")
    return 0


def _cmd_metric(args) -> int:
    if args.subcommand == "pa-mpjpe":
        pred = corpus_io.load_corpus(args.pred, "poses")
        ref = corpus_io.load_corpus(args.ref, "poses")
        if len(pred) != len(ref):
            raise DataError(f"clip count mismatch: {len(pred)} pred vs {len(ref)} ref")
        reports = [dtw_pa_mpjpe(p, r, args.allow_scale) for p, r in zip(pred, ref)]
        merged = MetricReport(
            overall=sum(r.overall for r in reports) / len(reports),
            per_part={p: sum(r.per_part[p] for r in reports) / len(reports) for p in PARTS},
        )
        print(json.dumps(merged.to_json_obj(), ensure_ascii=False))
    else:
        lang = parse_sign(args.lang)
        hyps = [tokenize_eval(line, lang) for line in Path(args.hyp).read_text(encoding="utf-8").splitlines()]
        refs = [tokenize_eval(line, lang) for line in Path(args.ref).read_text(encoding="utf-8").splitlines()]
        score = corpus_bleu(hyps, refs, max_n=args.max_n, smoothing=args.smoothing)
        print(json.dumps(score.to_json_obj(), ensure_ascii=False))
    return 0


def _cmd_bt(args, cfg: RunConfig) -> int:
    tokens = corpus_io.load_corpus(args.tokens, "tokens")
    store = corpus_io.build_token_store(tokens)
    if args.subcommand == "build":
        clip_langs = {t.id: t.sign_lang for t in tokens}
        gold = corpus_io.load_corpus(args.gold, "gold_manifest", clip_langs=clip_langs)
        bt_cfg = btcorpus.BtConfig(
            source_sign_lang=parse_sign(args.source_lang),
            mt=_endpoint_arg("mt", args.mt, cfg.timeout_ms),
            t2s=_endpoint_arg("t2s", args.t2s, cfg.timeout_ms),
            on_error=args.on_error,
        )
        result = btcorpus.build_bt_direction(gold, bt_cfg, store)
        corpus_io.save_corpus(result.pairs, args.out, "s2s_pairs")
        log_path = Path(args.log) if args.log else Path(str(args.out) + ".skipped.jsonl")
        if result.skipped:
            log_path.write_text(result.skip_log_text(), encoding="utf-8")
        print(f"built {len(result.pairs)} pairs, skipped {len(result.skipped)}")
    else:
        pairs = corpus_io.load_corpus(args.pairs, "s2s_pairs", token_store=store)
        table = btcorpus.bt_corpus_stats(pairs)
        if args.json:
            print(json.dumps(table.to_json_obj(), ensure_ascii=False))
        else:
            print(btcorpus.format_stats_table(table))
    return 0


def _cmd_verify(args) -> int:
    if args.subcommand == "filter":
        pairs = corpus_io.load_corpus(args.candidates, "candidates")
        ratings = verify.load_score_file(args.ratings, "llm_rating") if args.ratings else None
        cosines = verify.load_score_file(args.cosines, "cosine") if args.cosines else None
        pairs = verify.attach_scores(pairs, ratings, cosines)
        result = verify.apply_filters(pairs, args.rating_min, args.cosine_min)
        corpus_io.save_corpus(list(result.pool), args.out, "candidates")
        log_path = Path(args.log) if args.log else Path(str(args.out) + ".rejected.jsonl")
        log_path.write_text(result.rejection_log_text(), encoding="utf-8")
        print(f"kept {len(result.pool)} of {len(pairs)} pairs; rejections logged to {log_path}")
    elif args.subcommand == "stats":
        before = corpus_io.load_corpus(args.before, "candidates")
        after = corpus_io.load_corpus(args.after, "candidates")
        stats = verify.subset_stats(before, after)
        if args.json:
            print(json.dumps(stats.to_json_obj(), ensure_ascii=False))
        else:
            print(verify.format_subset_stats(stats))
    else:
        pool = corpus_io.load_corpus(args.pool, "candidates")
        annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]
        session = ScreeningSession(pool, annotators, persist_path=args.decisions)
        strict = verify.finalize_strict(session)
        Path(args.out).write_text(verify.dump_strict(strict), encoding="utf-8")
        print(f"strict subset: {len(strict)} of {len(pool)} pairs")
    return 0


def _cmd_review(args) -> int:
    pool = corpus_io.load_corpus(args.pool, "candidates")
    annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]
    decisions = args.decisions or str(args.pool) + ".decisions.jsonl"
    session = ScreeningSession(pool, annotators, persist_path=decisions, session_id=args.session_id)
    server = make_server(session, port=args.port)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _cmd_eval(args, cfg: RunConfig) -> int:
    systems = evalharness.load_systems(args.systems)
    anchor_sets = evalharness.load_anchor_sets(args.anchors)
    poses = corpus_io.load_corpus(args.poses, "poses")
    gold = corpus_io.load_corpus(args.gold, "gold_manifest")
    ctx = evalharness.EvalContext(
        quantizer=Codebook.load(args.quantizer),
        pose_store=corpus_io.build_pose_store(poses),
        text_store={g.sign_ref: g.text.text for g in gold},
        s2t_eval=_endpoint_arg("s2t", args.s2t, cfg.timeout_ms),
        source_mode=args.source_mode,
        t2s=_endpoint_arg("t2s", args.t2s, cfg.timeout_ms) if args.t2s else None,
        allow_scale=args.allow_scale,
    )
    matrix = evalharness.run_matrix(systems, anchor_sets, ctx)
    evalharness.write_matrix_report(matrix, args.out)
    print(f"wrote report for {len(systems)} systems x {len(anchor_sets)} directions to {args.out}")
    return 0


def dispatch(argv) -> int:
    argv = list(argv)
    cfg = RunConfig()
    # Pre-scan --config so its values become parser defaults; explicit flags win.
    try:
        for i, arg in enumerate(argv):
            if arg == "--config" and i + 1 < len(argv):
                cfg = load_config(argv[i + 1])
                break
            if arg.startswith("--config="):
                cfg = load_config(arg.split("=", 1)[1])
                break
    except S2SKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    parser = build_parser(cfg)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2

    try:
        if args.command == "quantize":
            return _cmd_quantize(args)
        if args.command == "metric":
            return _cmd_metric(args)
        if args.command == "bt":
            return _cmd_bt(args, cfg)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "review":
            return _cmd_review(args)
        if args.command == "eval":
            return _cmd_eval(args, cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except S2SKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
