"""Regenerate src/ellhol/fixtures/so4_smooth.json.

A constant Cartan loop in so(4) with rotation numbers (0.1, 0.175), moved by a
contractible gauge transformation.  Its supertrace is prod 2i sin(pi a).
"""
import json
from pathlib import Path

import numpy as np

from ellhol.transport import GaugeTransform, LoopConnection, cartan_block

ROT = [0.1, 0.175]
SEED = 20240
K = 512

conn = LoopConnection.constant(cartan_block(2 * np.pi * np.array(ROT)), K, "so")
gauged = GaugeTransform.random(4, np.random.default_rng(SEED)).apply(conn)
expected = complex(np.prod(2j * np.sin(np.pi * np.array(ROT))))
obj = gauged.to_json()
obj["metadata"] = {"rotation_numbers": ROT, "gauge_seed": SEED,
                   "expected_supertrace": [expected.real, expected.imag]}
out = Path(__file__).resolve().parents[1] / "src" / "ellhol" / "fixtures" / "so4_smooth.json"
out.write_text(json.dumps(obj) + "\n")
print(out)
