#!/usr/bin/env python3
"""Regenerates the synthetic fixture under data/. Deterministic (fixed seed)."""
import json
import random
import sys
from pathlib import Path

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"
rng = random.Random(20240611)
M_PER_DEG = 111194.92664455873

links = []


def add_link(coords, owners, rights=(), net="M"):
    lid = f"{len(links) + 1:04d}"
    links.append({"id": lid, "coords": coords, "owners": list(owners), "rights": list(rights), "net": net})
    return lid


def chain(lat0, lon0, lat1, lon1, pieces, owners, rights=(), net="M"):
    ids = []
    for k in range(pieces):
        a = k / pieces
        b = (k + 1) / pieces
        p = [round(lon0 + a * (lon1 - lon0), 6), round(lat0 + a * (lat1 - lat0), 6)]
        q = [round(lon0 + b * (lon1 - lon0), 6), round(lat0 + b * (lat1 - lat0), 6)]
        ids.append(add_link([p, q], owners, rights, net))
    return ids


# Northern east-west corridor (BNSF) and southern one (UP), 0.25 deg links.
north = chain(40.0, -104.5, 40.0, -95.5, 36, ["BNSF"])
south = chain(38.0, -104.5, 38.0, -95.5, 36, ["UP"])
# North-south connector at lon -100 owned by UP with BNSF trackage rights.
connector = chain(40.0, -100.0, 38.0, -100.0, 8, ["UP"], ["BNSF"])
# A KCS-only spur that neither corridor carrier may use.
spur = chain(38.0, -97.0, 37.0, -97.0, 4, ["KCS"])
# Short main-line leads every third node so corridors have junctions.
for k in range(3, 36, 3):
    lon = round(-104.5 + 0.25 * k, 6)
    add_link([[lon, 40.0], [lon, 40.02]], ["BNSF"])
    add_link([[lon, 38.0], [lon, 37.98]], ["UP"])
# Non-main-line track: sidings, a branch and a yard.
for k in range(5):
    lon = -103.0 + 1.5 * k
    add_link([[lon, 40.0], [lon + 0.05, 40.003], [lon + 0.1, 40.0]], ["BNSF"], net="S")
add_link([[-101.5, 40.0], [-101.5, 40.8]], ["BNSF"], net="B")
add_link([[-96.0, 38.0], [-96.05, 38.02]], ["UP"], net="Y")


def link_by_id(lid):
    return next(l for l in links if l["id"] == lid)


def point_near(lid, offset_m):
    (lon0, lat0), (lon1, lat1) = link_by_id(lid)["coords"][0], link_by_id(lid)["coords"][-1]
    t = rng.uniform(0.2, 0.8)
    lat = lat0 + t * (lat1 - lat0)
    lon = lon0 + t * (lon1 - lon0)
    # Offset perpendicular-ish: latitude for east-west track, longitude otherwise.
    if abs(lat1 - lat0) < abs(lon1 - lon0):
        lat += offset_m / M_PER_DEG * rng.choice([-1, 1])
    else:
        lon += offset_m / (M_PER_DEG * 0.77) * rng.choice([-1, 1])
    return round(lat, 6), round(lon, 6)


def timestamp():
    y = rng.randint(2010, 2021)
    return f"{y}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:00Z"


obs = []
# Photos along stretches of each corridor, leaving holes for gap inference.
confirmed_idx = {
    "north": [1, 2, 3, 9, 10, 16, 17, 22, 23, 24, 30, 34],
    "south": [2, 3, 12, 13, 14, 20, 27, 28, 33],
}
n = 0
for name, idxs in confirmed_idx.items():
    ids = north if name == "north" else south
    for i in idxs:
        for _ in range(3):
            n += 1
            lat, lon = point_near(ids[i], rng.uniform(0, 45))
            obs.append((f"P{n:04d}", lat, lon, timestamp(), "photo", ""))
# A few photos between 160 and 320 feet out, and some that are off every link.
for i in (5, 6):
    n += 1
    lat, lon = point_near(north[i], rng.uniform(55, 90))
    obs.append((f"P{n:04d}", lat, lon, timestamp(), "photo", ""))
for _ in range(4):
    n += 1
    obs.append((f"P{n:04d}", round(rng.uniform(41.5, 43), 6), round(rng.uniform(-104, -96), 6), timestamp(), "photo", ""))
obs.append(("T01", *point_near(north[0], 150), "", "terminal", "loading"))
obs.append(("T02", *point_near(south[35], 300), "", "terminal", "unloading"))
obs.append(("T03", *point_near(connector[4], 200), "", "terminal", "both"))
obs.append(("T04", 44.0, -103.0, "", "terminal", "loading"))  # nowhere near track

incidents = []
cities = [("Alpha", "NE"), ("Bravo", "KS"), ("Charlie", "CO"), ("Delta", "MO"), ("Echo", "OK"), ("Foxtrot", "IA")]
for k in range(30):
    ids = rng.choice([north, south])
    lat, lon = point_near(rng.choice(ids), rng.uniform(0, 15000))
    city, state = cities[k % len(cities)]
    y = rng.randint(2011, 2016)
    phase = rng.choice(["IN TRANSIT", "IN TRANSIT", "STORAGE INCIDENTAL TO TRANSPORTATION", "UNLOADING"])
    incidents.append((f"{y}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}", city, state, lat, lon, phase))
incidents.append(("1/17/2013", "Temple", "TX", 31.098, -97.342, "IN TRANSIT"))
incidents.append(("2014-05-02", "Golf", "SD", 44.5, -100.0, "IN TRANSIT"))

# Five PADDs as 2-degree longitude strips, PADD1 westmost.
padds = []
for k in range(1, 6):
    w = -105.0 + 2.0 * (k - 1)
    e = w + 2.0
    padds.append((f"PADD{k}", [[[w, 35.0], [e, 35.0], [e, 45.0], [w, 45.0], [w, 35.0]]]))

metros = []
for k, (lat, lon) in enumerate([(40.0, -102.2), (38.0, -99.4), (39.0, -100.0), (41.5, -98.0), (36.5, -97.0), (38.0, -96.3)]):
    s = 0.15
    metros.append((f"M{k + 1:02d}", [[[lon - s, lat - s], [lon + s, lat - s], [lon + s, lat + s], [lon - s, lat + s], [lon - s, lat - s]]]))


def write_regions(path, regions, key):
    feats = [{"type": "Feature", "properties": {key: rid}, "geometry": {"type": "Polygon", "coordinates": c}} for rid, c in regions]
    path.write_text(json.dumps({"type": "FeatureCollection", "features": feats}, indent=1) + "\n")


OUT.mkdir(parents=True, exist_ok=True)
(OUT / "network.geojson").write_text(json.dumps({"type": "FeatureCollection", "features": [
    {"type": "Feature",
     "properties": {"id": l["id"], "owners": l["owners"], "trackage_rights": l["rights"], "net": l["net"]},
     "geometry": {"type": "LineString", "coordinates": l["coords"]}} for l in links]}, indent=1) + "\n")
with open(OUT / "observations.csv", "w") as f:
    f.write("id,lat,lon,timestamp,kind,terminal_role\n")
    for row in obs:
        f.write(",".join(str(x) for x in row) + "\n")
with open(OUT / "incidents.csv", "w") as f:
    f.write("date,city,state,lat,lon,phase\n")
    for row in incidents:
        f.write(",".join(str(x) for x in row) + "\n")
(OUT / "od_matrix.csv").write_text(
    "padd,PADD1,PADD2,PADD3,PADD4,PADD5\n"
    "PADD1,0,0,0,0,0\n"
    "PADD2,\"48,140\",\"6,846\",\"24,891\",34,\"37,283\"\n"
    "PADD3,11,\"1,756\",\"5,822\",678,997\n"
    "PADD4,\"1,492\",553,\"9,841\",45,\"1,052\"\n"
    "PADD5,0,0,0,0,\"1,805\"\n")
write_regions(OUT / "padd_regions.geojson", padds, "region_id")
write_regions(OUT / "metros.geojson", metros, "region_id")
(OUT / "config.toml").write_text(
    "# Synthetic fixture; paths are relative to this file.\n"
    "network = \"network.geojson\"\n"
    "observations = \"observations.csv\"\n"
    "incidents = \"incidents.csv\"\n"
    "od_matrix = \"od_matrix.csv\"\n"
    "padd_regions = \"padd_regions.geojson\"\n"
    "metro_regions = \"metros.geojson\"\n"
    "output_dir = \"railtrace_out\"\n")

# Six links in the shape of the expansion example.
chain6 = [
    ("1", [[-100.01, 40.01], [-100.0, 40.0]]),
    ("2", [[-100.01, 39.99], [-100.0, 40.0]]),
    ("3", [[-100.0, 40.0], [-99.99, 40.0]]),
    ("4", [[-99.99, 40.0], [-99.98, 40.0]]),
    ("5", [[-99.98, 40.0], [-99.97, 40.0]]),
    ("6", [[-99.97, 40.0], [-99.96, 40.0]]),
]
(OUT / "junction_chain").mkdir(exist_ok=True)
(OUT / "junction_chain" / "network.geojson").write_text(json.dumps({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": i, "owners": ["BNSF"], "trackage_rights": [], "net": "M"},
     "geometry": {"type": "LineString", "coordinates": c}} for i, c in chain6]}, indent=1) + "\n")
(OUT / "junction_chain" / "config.toml").write_text("network = \"network.geojson\"\noutput_dir = \"railtrace_out\"\n")
