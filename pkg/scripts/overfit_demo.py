#!/usr/bin/env python3
"""Full command-line walkthrough on a ten-question toy corpus.

Writes a corpus to a scratch directory, then drives every subcommand:
vocabularies -> training -> prediction -> scoring. The model memorises
the corpus, so both metrics end at 1.0.

Usage: python3 scripts/overfit_demo.py [workdir]
"""

import sys
import tempfile
from pathlib import Path

from imageqa.cli import main

TAXONOMY = "animal\t-\ndog\tanimal\nhorse\tanimal\ndalmatian\tdog\n"
LEXICON = "dog\tdog\nhorse\thorse\ndalmatian\tdalmatian\n"


def build_corpus(n=10):
    lines = []
    for i in range(n):
        lines += [f"what is obj{i} ?", f"ans{i}", f"img{i}"]
    return "\n".join(lines) + "\n"


def run(*argv):
    argv = [str(a) for a in argv]
    print("$ imageqa " + " ".join(argv))
    code = main(argv)
    if code != 0:
        raise SystemExit(code)


def demo(root: Path):
    train = root / "train.txt"
    train.write_text(build_corpus(), encoding="utf-8")
    (root / "taxonomy.txt").write_text(TAXONOMY, encoding="utf-8")
    (root / "lexicon.txt").write_text(LEXICON, encoding="utf-8")

    run("build-vocab", "--train", train,
        "--out-q", root / "vocab_q.txt", "--out-a", root / "vocab_a.txt")
    run("train", "--model", "blind-bow",
        "--train", train,
        "--vocab-q", root / "vocab_q.txt", "--vocab-a", root / "vocab_a.txt",
        "--embed-dim", 64, "--optimizer", "adam", "--epochs", 150,
        "--batch", 10, "--dropout", 0, "--val-split", 0, "--seed", 7,
        "--out", root / "model.ckpt")
    run("predict", "--checkpoint", root / "model.ckpt",
        "--test", train,
        "--vocab-q", root / "vocab_q.txt", "--vocab-a", root / "vocab_a.txt",
        "--out", root / "pred.txt")

    truth = root / "truth.txt"
    truth.write_text(
        "".join(f"ans{i}\n" for i in range(10)), encoding="utf-8"
    )
    run("eval", "--pred", root / "pred.txt", "--truth", truth, "--metric", "acc")
    print("artifacts kept in", root)


if __name__ == "__main__":
    if len(sys.argv) > 1:
        workdir = Path(sys.argv[1])
        workdir.mkdir(parents=True, exist_ok=True)
        demo(workdir)
    else:
        with tempfile.TemporaryDirectory(prefix="imageqa-demo-") as tmp:
            demo(Path(tmp))
