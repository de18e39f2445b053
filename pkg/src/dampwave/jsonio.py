"""Deterministic JSON output: sorted keys, floats at 17 significant digits.

The stock json module formats floats with repr, which is round-trip exact but
not a fixed digit count; results here are written through %.17g so every
numeric artifact follows the same rule and reruns are byte-identical.
"""

import numpy as np

__all__ = ["dumps_json", "dump_json"]


def _fmt(obj, pieces):
    if obj is None:
        pieces.append("null")
    elif obj is True:
        pieces.append("true")
    elif obj is False:
        pieces.append("false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x) or np.isinf(x):
            # not valid JSON as bare literals; quote them
            pieces.append('"%s"' % x)
        else:
            pieces.append("%.17g" % x)
    elif isinstance(obj, str):
        pieces.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"')
                      .replace("\n", "\\n").replace("\t", "\\t") + '"')
    elif isinstance(obj, dict):
        pieces.append("{")
        for k, key in enumerate(sorted(obj)):
            if k:
                pieces.append(", ")
            _fmt(str(key), pieces)
            pieces.append(": ")
            _fmt(obj[key], pieces)
        pieces.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        pieces.append("[")
        for k, item in enumerate(seq):
            if k:
                pieces.append(", ")
            _fmt(item, pieces)
        pieces.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def dumps_json(obj):
    pieces = []
    _fmt(obj, pieces)
    return "".join(pieces)


def dump_json(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps_json(obj) + "\n")
