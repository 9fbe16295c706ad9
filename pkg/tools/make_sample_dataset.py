"""Regenerate the bundled sample dataset.

Latencies are modelled round-trip times: great-circle distance over fibre
(~200 km/ms one way), inflated by 1.6 for routing detours, plus 4 ms of
endpoint overhead. Hash shares are synthetic, with most of the hash in
North America and Europe. The fixed topology is a seeded random draw.
"""

import math
import sys

import numpy as np

from topobandit.data import generate_fixed_topology, save_dataset
from topobandit.network import NetworkSpec

CITIES = [
    ("Amsterdam", 52.37, 4.90, 8),
    ("Atlanta", 33.75, -84.39, 6),
    ("Shanghai", 31.23, 121.47, 7),
    ("Tokyo", 35.68, 139.69, 3),
    ("Frankfurt", 50.11, 8.68, 10),
    ("London", 51.51, -0.13, 7),
    ("Paris", 48.86, 2.35, 4),
    ("Moscow", 55.76, 37.62, 5),
    ("New York", 40.71, -74.01, 9),
    ("Chicago", 41.88, -87.63, 6),
    ("Dallas", 32.78, -96.80, 5),
    ("San Jose", 37.34, -121.89, 8),
    ("Seattle", 47.61, -122.33, 4),
    ("Singapore", 1.35, 103.82, 5),
    ("Hong Kong", 22.32, 114.17, 8),
    ("Seoul", 37.57, 126.98, 5),
]


def great_circle_km(a, b):
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(h))


def main(out):
    n = len(CITIES)
    lat = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                km = great_circle_km(CITIES[i][1:3], CITIES[j][1:3])
                lat[i, j] = round(2 * km / 200.0 * 1.6 + 4.0, 1)
    hashes = np.array([c[3] for c in CITIES], dtype=float) / 100.0
    edges = generate_fixed_topology(n, None, 4, 12, seed=20230601)
    spec = NetworkSpec(hash=hashes, latency=lat, fixed_edges=edges, delta=4, gamma=12, labels=[c[0] for c in CITIES])
    save_dataset(
        spec,
        out,
        notes="Sample network. Latencies are modelled RTTs from great-circle distance "
        "(not measurements); hash shares are synthetic; fixed edges are a seeded random draw.",
    )


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/topobandit/data/sample_network.json")
