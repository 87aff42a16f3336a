"""Fetch the MNIST IDX files and install them under data/mnist.

Source: the `mnist-data` npm package (v1.2.6), which ships the four
original uncompressed IDX files (60,000 training and 10,000 test
digits). The payload bytes are checked against known SHA-256 digests
and re-encoded through save_idx, so the installed .gz files are
byte-stable across runs.

Usage:
    python tools/fetch_mnist.py --out data/mnist
    # or, with a pre-downloaded copy:
    npm pack mnist-data@1.2.6 && tar xf mnist-data-1.2.6.tgz
    python tools/fetch_mnist.py --src package/data --out data/mnist
"""

from __future__ import annotations

import argparse
import hashlib
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tmxbar.data import RawDataset, load_idx, save_idx  # noqa: E402

NPM_SPEC = "mnist-data@1.2.6"

# SHA-256 of the raw image/label payloads (IDX bodies without headers).
CHECKSUMS = {
    "train": (
        60000,
        "741c988805d008ac6e4c904b69001ba184c24b2c540a4ef403f4c71b676cf757",
        "e474323ac02fc156161b0bbb1f8c9cfeb327a74bcd9f9680a8385269a24f566c",
    ),
    "t10k": (
        10000,
        "6d87418db22cc8025d05968bec9bd5c3932904b23485740db143a061a2c9d161",
        "2fd8de6bdb8d11780b4b96dc57847bcfe6953f7c32aa48bfcd8237c3b7847243",
    ),
}


def npm_download(workdir: Path) -> Path:
    subprocess.run(
        ["npm", "pack", NPM_SPEC], cwd=workdir, check=True, capture_output=True
    )
    tarball = next(workdir.glob("mnist-data-*.tgz"))
    with tarfile.open(tarball) as tf:
        tf.extractall(workdir, filter="data")
    return workdir / "package" / "data"


def verify(prefix: str, ds: RawDataset) -> None:
    count, images_sha, labels_sha = CHECKSUMS[prefix]
    if len(ds.labels) != count:
        raise SystemExit(f"{prefix}: expected {count} samples, got {len(ds.labels)}")
    got = hashlib.sha256(np.ascontiguousarray(ds.images).tobytes()).hexdigest()
    if got != images_sha:
        raise SystemExit(f"{prefix}: image payload checksum mismatch ({got})")
    got = hashlib.sha256(np.ascontiguousarray(ds.labels).tobytes()).hexdigest()
    if got != labels_sha:
        raise SystemExit(f"{prefix}: label payload checksum mismatch ({got})")


def install(src: Path, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for prefix in ("train", "t10k"):
        ds = load_idx(
            src / f"{prefix}-images-idx3-ubyte",
            src / f"{prefix}-labels-idx1-ubyte",
        )
        verify(prefix, ds)
        save_idx(
            out / f"{prefix}-images-idx3-ubyte.gz",
            out / f"{prefix}-labels-idx1-ubyte.gz",
            ds,
        )
        print(f"{prefix}: {len(ds.labels)} samples -> {out}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--src", type=Path, default=None,
                    help="directory with the four extracted IDX files "
                         "(default: download via npm)")
    ap.add_argument("--out", type=Path, default=Path("data/mnist"))
    args = ap.parse_args()

    if args.src is not None:
        install(args.src, args.out)
        return
    with tempfile.TemporaryDirectory() as tmp:
        install(npm_download(Path(tmp)), args.out)


if __name__ == "__main__":
    main()
