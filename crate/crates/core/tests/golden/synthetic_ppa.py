"""Independent evaluation of the synthetic PPA skeleton; writes synthetic_ppa.json."""
import json
import math
try:
    import tomllib
except ImportError:
    import tomli as tomllib
from pathlib import Path

HERE = Path(__file__).parent
SPECS = HERE.parent.parent / "fixtures"
VT_DELAY = {"low": 0.9, "standard": 1.0, "high": 1.15}
VT_LEAK = {"low": 3.0, "standard": 1.0, "high": 0.4}
RED = {"none": 0, "row": 1, "row_io": 2}

COEFFS = dict(a0=450.0, a1=0.004, ar=0.04, a2=0.45, a3=0.75, t0=0.2, t1=0.05, t2=0.02,
              c0=1.1, c1=0.2, p0=1.0, p1=0.0075, p2=0.00075, w=0.15, l0=5.0, l1=0.0011,
              l2=2.0, l3=1.5)

CASES = [
    ("compilers/sram_a.toml", 32, 8, 1, 4, "low", "none"),
    ("compilers/sram_a.toml", 1024, 77, 2, 8, "standard", "row"),
    ("compilers/sram_a.toml", 4352, 320, 4, 16, "high", "row_io"),
    ("compilers/sram_a.toml", 32768, 128, 4, 4, "standard", "none"),
    ("compilers/sram_c.toml", 64, 16, 2, 16, "high", "row"),
    ("specs/sram_small.toml", 16384, 256, 8, 8, "low", "row_io"),
]


def ppa(spec, k, depth, width, banks, mux, vt, red):
    bits = depth * width
    max_mux = max(c for p in spec["params"] if p["name"] == "column_mux" for c in p["choices"])
    area = k["a0"] + k["a1"] * bits * (1 + k["ar"] * RED[red]) + k["a2"] * banks * math.sqrt(bits) \
        + k["a3"] * width * mux
    out = dict(area=area, access_time=[], cycle_time=[], read_power=[], write_power=[], leakage=[])
    for c in spec["corners"]:
        access = (k["t0"] + k["t1"] * math.log2(depth / banks) + k["t2"] * math.log2(width)) \
            * VT_DELAY[vt] * c["process"] / c["voltage"]
        read = (k["p0"] + k["p1"] * width * math.sqrt(banks) + k["p2"] * depth / mux) * c["voltage"] ** 2
        out["access_time"].append(access)
        out["cycle_time"].append(access * (k["c0"] + k["c1"] * mux / max_mux))
        out["read_power"].append(read)
        out["write_power"].append(read * (1 + k["w"]))
        out["leakage"].append((k["l0"] + k["l1"] * bits * VT_LEAK[vt]) * c["process"] ** k["l2"]
                              * math.exp(k["l3"] * (c["temperature"] - 1)))
    return out


cases = []
for path, depth, width, banks, mux, vt, red in CASES:
    spec = tomllib.loads((SPECS / path).read_text())
    values = dict(word_depth=depth, word_width=width, banks=banks, column_mux=mux, periphery_vt=vt,
                  redundancy=red)
    cases.append(dict(
        spec=path,
        coefficients=dict(compiler_id=spec["compiler_id"], version=spec["version"], **COEFFS),
        parametrization=dict(compiler_id=spec["compiler_id"], version=spec["version"], values=values),
        ppa=ppa(spec, COEFFS, depth, width, banks, mux, vt, red),
    ))
(HERE / "synthetic_ppa.json").write_text(json.dumps(dict(cases=cases), indent=1) + "\n")
