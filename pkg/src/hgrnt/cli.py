"""Command-line entry point: ``hgrnt {train,eval,sweep,predict,gradcheck}``.

Exit status is 0 on success, 1 on usage or configuration errors and 2 on
runtime or verification failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, load_config
from .data import FormatError, ParseError, load_embeddings, read_wikiqa
from .estimator import AnswerTrigger
from .metrics import format_diagnostics, format_report
from .model import TrainingDivergedError

logger = logging.getLogger("hgrnt")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
CHECKPOINT_NAME = "model.ckpt"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hgrnt", description="Answer triggering with a hierarchical GRU tensor model.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train with early stopping on dev F")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", help=f"output path (default: <checkpoint_dir>/{CHECKPOINT_NAME})")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval", help="print precision / recall / F for a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "dev", "test"), default="test")
    p.add_argument("--config", help="take split paths from this config instead of the checkpoint")
    p.add_argument("--threshold", type=float)
    p.add_argument("--diagnostics", help="write per-question decisions to this file")

    p = sub.add_parser("sweep", help="pick the F-optimal threshold and store it in the checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "dev", "test"), default="dev")
    p.add_argument("--config")

    p = sub.add_parser("predict", help="score one question's candidates from a WikiQA TSV file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("gradcheck", help="finite-difference check of all four model variants")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_table(cfg: RunConfig):
    if cfg.embeddings is not None and cfg.embeddings.is_file():
        with open(cfg.embeddings, encoding="utf-8") as fh:
            return load_embeddings(fh, cfg.embed_dim)
    return None


def _estimator(cfg: RunConfig, table) -> AnswerTrigger:
    return AnswerTrigger(
        embeddings=table,
        embed_dim=cfg.embed_dim,
        sent_hidden=cfg.sent_hidden,
        ctx_hidden=cfg.ctx_hidden,
        r=cfg.r,
        use_context=cfg.use_context,
        use_tensor=cfg.use_tensor,
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.epsilon,
        max_epochs=cfg.max_epochs,
        patience=cfg.patience,
        clip_norm=cfg.clip_norm,
        seed=cfg.seed,
    )


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    table = _load_table(cfg)
    train_q = read_wikiqa(cfg.train)
    dev_q = read_wikiqa(cfg.dev) if cfg.dev is not None else None
    est = _estimator(cfg, table)
    log_lines = ["epoch\ttrain_loss\tdev_P\tdev_R\tdev_F"]

    def emit(line):
        log_lines.append(line)
        sys.stdout.write(line + "\n")
        sys.stdout.flush()

    sys.stdout.write(log_lines[0] + "\n")

    def on_epoch(epoch, loss, dev):
        if dev is None:
            emit(f"{epoch}\t{loss:.6f}\t-\t-\t-")
        else:
            r = dev[1]
            emit(f"{epoch}\t{loss:.6f}\t{r.precision:.2f}\t{r.recall:.2f}\t{r.f1:.2f}")

    if dev_q is not None:
        est.fit(train_q, X_dev=dev_q, on_epoch=on_epoch)
    else:
        est.fit(train_q, on_epoch=on_epoch)

    ckpt_path = Path(args.checkpoint) if args.checkpoint else cfg.checkpoint_dir / CHECKPOINT_NAME
    save_checkpoint(Checkpoint.from_estimator(est, cfg), ckpt_path)
    log_text = "\n".join(log_lines) + "\n"
    ckpt_path.with_name(ckpt_path.stem + ".epochs.tsv").write_text(log_text, encoding="utf-8")
    if dev_q is not None:
        sys.stdout.write(f"best_epoch\t{est.best_epoch_}\tthreshold\t{est.threshold_:.2f}\n")
        sys.stdout.write(format_report(est.evaluate(dev_q), name="dev"))
    sys.stdout.write(f"checkpoint\t{ckpt_path}\n")
    return EXIT_OK


def _split_questions(ckpt: Checkpoint, split: str, config_path: Optional[str]):
    cfg = load_config(config_path, require_data=False) if config_path else ckpt.run_config
    path = cfg.split_path(split)
    if not path.is_file():
        raise ConfigError(f"{split} file not found: {path}")
    return read_wikiqa(path)


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    questions = _split_questions(ckpt, args.split, args.config)
    report = ckpt.to_estimator().evaluate(questions, args.threshold)
    sys.stdout.write(format_report(report, name=args.split))
    if args.diagnostics:
        Path(args.diagnostics).write_text(format_diagnostics(report), encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    questions = _split_questions(ckpt, args.split, args.config)
    est = ckpt.to_estimator()
    best_t, best, table = est.select_threshold(questions)
    out = ["threshold\tPrec\tRec\tF"]
    out += [f"{t:.2f}\t{r.precision:.2f}\t{r.recall:.2f}\t{r.f1:.2f}" for t, r in table]
    out.append(f"best\t{best_t:.2f}\tF\t{best.f1:.2f}")
    sys.stdout.write("\n".join(out) + "\n")
    ckpt.threshold = best_t
    if args.split == "dev":
        ckpt.best_dev_f = best.f1
    save_checkpoint(ckpt, args.checkpoint)
    return EXIT_OK


def cmd_predict(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    questions = read_wikiqa(args.input)
    if len(questions) != 1:
        raise UsageError(f"{args.input}: expected exactly one question, found {len(questions)}")
    est = ckpt.to_estimator()
    q = questions[0]
    scores = est.predict_proba([q])[0]
    decision = est.predict([q], args.threshold)[0]
    lines = ["SentenceID\tScore"]
    lines += [f"{c.sentence_id}\t{s:.6f}" for c, s in zip(q.candidates, scores)]
    chosen = "reject" if decision is None else q.candidates[decision].sentence_id
    lines.append(f"decision\t{chosen}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_suite

    lines, failures = run_suite(args.tolerance, args.seed)
    sys.stdout.write("\n".join(lines) + "\n")
    for f in failures:
        sys.stdout.write(
            f"FAIL\t{f.variant}\t{f.parameter}\tcoord={f.coordinate}\trel_err={f.error:.3e}\n"
        )
    return EXIT_RUNTIME if failures else EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        sys.stderr.write(f"hgrnt {args.command}: {exc}\n")
        return EXIT_USAGE
    except (CheckpointError, ParseError, FormatError, TrainingDivergedError, OSError, ValueError) as exc:
        sys.stderr.write(f"hgrnt {args.command}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
