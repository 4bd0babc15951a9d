"""Bundled data files and their checksum manifest."""

import hashlib
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ChecksumError

MANIFEST = "MANIFEST.sha256"

FEATURES = "features.tsv"
INVENTORY_EN = "inventory_en.tsv"
INVENTORY_KO = "inventory_ko.tsv"
CODAS_KO = "ko_codas.txt"
RULES = "rules_en_ko.txt"
LEXICON = "lexicon_mini.tsv"
PROMPT = "prompt_cue.txt"
BIGRAMS = "char_bigrams.tsv"


def data_dir():
    return Path(str(resources.files("mnemokey") / "data"))


def asset_path(name):
    return data_dir() / name


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@lru_cache(maxsize=None)
def manifest():
    entries = {}
    for line in asset_path(MANIFEST).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        digest, name = line.split(maxsplit=1)
        entries[name.lstrip("*")] = digest
    return entries


def is_bundled(path):
    path = Path(path).resolve()
    return path.parent == data_dir().resolve() and path.name in manifest()


def verify(path):
    """Raise ChecksumError if a bundled asset no longer matches the manifest.

    Paths outside the bundled data directory are not checked.
    """
    path = Path(path)
    if not is_bundled(path):
        return
    expected = manifest()[path.name]
    actual = sha256_file(path)
    if actual != expected:
        raise ChecksumError(f"{path.name}: checksum {actual} does not match manifest {expected}")


def write_manifest():
    """Regenerate the manifest from the files currently in the data directory."""
    lines = []
    for path in sorted(data_dir().iterdir()):
        if path.name == MANIFEST or path.name.startswith(".") or not path.is_file():
            continue
        lines.append(f"{sha256_file(path)}  {path.name}")
    asset_path(MANIFEST).write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest.cache_clear()
