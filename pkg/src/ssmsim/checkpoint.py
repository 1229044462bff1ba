"""Plain-text weight checkpoints.

Header lines are ``key=value``; each array follows as a ``[name rows cols]``
line and row-major rows of space-separated decimals written with 17
significant digits, which round-trips IEEE doubles exactly.
"""
import numpy as np

from .core import SsmNetwork
from .exceptions import ParameterError

MAGIC = "# ssmsim checkpoint v1"
_ARRAYS = ("W", "b_hidden", "b_visible", "W_out")


def _fmt(x):
    return format(float(x), ".17g")


def dumps(net: SsmNetwork, seed, extra=None):
    lines = [MAGIC,
             f"num_visible={net.num_visible}",
             f"num_hidden={net.num_hidden}",
             f"num_outputs={net.num_outputs}",
             f"p={_fmt(net.p)}",
             f"seed={int(seed)}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    for name in _ARRAYS:
        a = np.atleast_2d(getattr(net, name))
        lines.append(f"[{name} {a.shape[0]} {a.shape[1]}]")
        lines.extend(" ".join(_fmt(x) for x in row) for row in a)
    return "\n".join(lines) + "\n"


def loads(text):
    """Parse checkpoint text; returns ``(network, header_dict)``."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ParameterError("not an ssmsim checkpoint")
    header, arrays = {}, {}
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("["):
            name, rows, cols = line.strip("[]").split()
            rows, cols = int(rows), int(cols)
            data = [[float(x) for x in lines[i + r].split()] for r in range(rows)]
            i += rows
            arr = np.array(data, dtype=np.float64).reshape(rows, cols)
            arrays[name] = arr
        else:
            k, _, v = line.partition("=")
            header[k] = v
    missing = [n for n in _ARRAYS if n not in arrays]
    if missing:
        raise ParameterError(f"checkpoint lacks arrays {missing}")
    net = SsmNetwork(arrays["W"], arrays["b_hidden"].ravel(), arrays["b_visible"].ravel(),
                     arrays["W_out"], float(header["p"]))
    dims = (int(header["num_visible"]), int(header["num_hidden"]), int(header["num_outputs"]))
    if dims != (net.num_visible, net.num_hidden, net.num_outputs):
        raise ParameterError("checkpoint header dims disagree with its arrays")
    return net, header


def save(path, net, seed, extra=None):
    with open(path, "w") as fh:
        fh.write(dumps(net, seed, extra))


def load(path):
    with open(path) as fh:
        return loads(fh.read())
