#!/usr/bin/env python3
"""Install the MNIST IDX files into data/mnist/ (gzipped).

The handwritten-digit corpus ships inside the npm package ``mnist-data``
as the original big-endian IDX files, which makes it fetchable through a
plain npm mirror. This script downloads that package with ``npm pack``,
verifies the IDX headers, and stores gzipped copies under data/mnist/.

If npm is unavailable, place the standard files (train-images-idx3-ubyte,
train-labels-idx1-ubyte, optionally the t10k pair), gzipped or not, into
data/mnist/ yourself; the loaders handle both forms.
"""

import gzip
import shutil
import struct
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
TARGET = REPO_ROOT / "data" / "mnist"
FILES = {
    "train-images-idx3-ubyte": 0x803,
    "train-labels-idx1-ubyte": 0x801,
    "t10k-images-idx3-ubyte": 0x803,
    "t10k-labels-idx1-ubyte": 0x801,
}


def verify_magic(path: Path, expected: int) -> None:
    with open(path, "rb") as fh:
        (magic,) = struct.unpack(">I", fh.read(4))
    if magic != expected:
        raise SystemExit(f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected:08x}")


def already_present() -> bool:
    return all(
        (TARGET / name).exists() or (TARGET / f"{name}.gz").exists() for name in FILES
    )


def main() -> int:
    if already_present():
        print(f"MNIST already present under {TARGET}")
        return 0
    TARGET.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        print("downloading the mnist-data npm package...")
        proc = subprocess.run(
            ["npm", "pack", "mnist-data", "--pack-destination", tmp],
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            print(
                "npm pack failed; install MNIST manually into data/mnist/ "
                "(see this script's docstring)",
                file=sys.stderr,
            )
            return 1
        tarball = next(Path(tmp).glob("mnist-data-*.tgz"))
        with tarfile.open(tarball) as tf:
            for name, magic in FILES.items():
                member = tf.extractfile(f"package/data/{name}")
                if member is None:
                    raise SystemExit(f"{tarball} does not contain package/data/{name}")
                extracted = Path(tmp) / name
                extracted.write_bytes(member.read())
                verify_magic(extracted, magic)
                with open(extracted, "rb") as src, gzip.open(
                    TARGET / f"{name}.gz", "wb", compresslevel=9
                ) as dst:
                    shutil.copyfileobj(src, dst)
                print(f"  {TARGET / name}.gz")
    print("done")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
