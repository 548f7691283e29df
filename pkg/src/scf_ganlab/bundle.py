"""JSON model bundles shared by GAN and classifier persistence.

A bundle is one JSON object with a ``magic`` tag, ``format_version``, the
payload, and ``checksum``: the SHA-256 of the canonical (sorted, compact)
encoding of every other field. Floats go through ``repr`` and therefore
round-trip exactly.
"""

import hashlib
import json

import numpy as np

from .errors import BundleVersionError, ChecksumError, NotABundleError, TruncatedBundleError
from .nn import Mlp, layer_from_spec

MAGIC = "scf-ganlab-bundle"
FORMAT_VERSION = 1


def mlp_to_dict(net: Mlp):
    return {
        "layer_specs": net.spec(),
        "output_scale": net.output_scale,
        "params": net.params.tolist(),
        "batchnorm_state": [{"running_mean": bn.running_mean.tolist(),
                             "running_var": bn.running_var.tolist()} for bn in net.batchnorms()],
    }


def mlp_from_dict(d) -> Mlp:
    net = Mlp([layer_from_spec(s) for s in d["layer_specs"]], d["output_scale"])
    net.params[...] = np.array(d["params"], dtype=np.float64)
    for bn, st in zip(net.batchnorms(), d["batchnorm_state"]):
        bn.running_mean = np.array(st["running_mean"], dtype=np.float64)
        bn.running_var = np.array(st["running_var"], dtype=np.float64)
    return net


def _canonical(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def dumps_bundle(kind: str, payload: dict) -> str:
    doc = {"magic": MAGIC, "format_version": FORMAT_VERSION, "kind": kind, **payload}
    doc["checksum"] = hashlib.sha256(_canonical(doc)).hexdigest()
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_bundle(path, kind: str, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_bundle(kind, payload))


def loads_bundle(text: str, kind=None) -> dict:
    stripped = text.lstrip()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        if stripped.startswith("{"):
            raise TruncatedBundleError(f"bundle is truncated or corrupt: {exc}") from None
        raise NotABundleError("not a model bundle") from None
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise NotABundleError("not a model bundle")
    if doc.get("format_version") != FORMAT_VERSION:
        raise BundleVersionError(
            f"bundle format_version {doc.get('format_version')!r}, expected {FORMAT_VERSION}")
    checksum = doc.pop("checksum", None)
    if checksum != hashlib.sha256(_canonical(doc)).hexdigest():
        raise ChecksumError("bundle checksum does not match its contents")
    if kind is not None and doc.get("kind") != kind:
        raise NotABundleError(f"bundle holds a {doc.get('kind')!r}, expected {kind!r}")
    return doc


def read_bundle(path, kind=None) -> dict:
    with open(path, encoding="utf-8") as fh:
        return loads_bundle(fh.read(), kind)
