#!/usr/bin/env python3
"""Generates the bundled three-community synthetic city under data/fixture/.

The output is deterministic; rerunning rewrites identical files.
"""

import csv
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fixture"

# name, sector, (lon_min, lat_min, lon_max, lat_max)
COMMUNITIES = [
    ("RIVERBEND", "SOUTH", (-114.20, 51.00, -114.10, 51.05)),
    ("HILLCREST", "SOUTH", (-114.10, 51.00, -114.00, 51.05)),
    ("NORTHGATE", "NORTH", (-114.20, 51.05, -114.00, 51.10)),
]

# traffic hot spots (lat, lon); one per community
HOTSPOTS = [(51.025, -114.15), (51.020, -114.04), (51.080, -114.12)]

CRIME_CATEGORIES = ["Assault", "Break & Enter", "Theft from Vehicle", "Theft of Vehicle"]

DESCRIPTIONS = [
    "Two vehicle incident at 5 Ave and 4 St",
    "Multi-vehicle incident on Deerfoot Tr",
    "Stalled vehicle blocking the right lane",
    "Pedestrian struck at crosswalk",
    "Single vehicle incident into median",
    "Traffic signal malfunction",
    "LRT crossing arms down",
    "Incident with injuries",
    "Debris on roadway",
]


def boundaries():
    features = []
    for name, sector, (x0, y0, x1, y1) in COMMUNITIES:
        ring = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
        features.append({
            "type": "Feature",
            "properties": {"name": name, "sector": sector},
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        })
    return {"type": "FeatureCollection", "features": features}


def inside(rng, box, margin=0.002):
    x0, y0, x1, y1 = box
    return (round(rng.uniform(y0 + margin, y1 - margin), 6), round(rng.uniform(x0 + margin, x1 - margin), 6))


def write_csv(name, header, rows):
    with open(OUT / name, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def month_date(rng, year_from=2018, year_to=2020):
    y = rng.randint(year_from, year_to)
    m = rng.randint(1, 12)
    return f"{y:04d}-{m:02d}-{rng.randint(1, 28):02d}"


def main():
    rng = random.Random(20240611)
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "boundaries.geojson").write_text(json.dumps(boundaries(), indent=1) + "\n")

    # streetlights: coordinates only, a few unknown wattages
    rows = []
    for c, (_, _, box) in enumerate(COMMUNITIES):
        for i in range(40 + 25 * c):
            lat, lon = inside(rng, box)
            watt = "" if rng.random() < 0.05 else rng.choice([50, 100, 150, 250])
            rows.append([f"SL{c}{i:03d}", watt, lat, lon])
    write_csv("streetlights.csv", ["id", "wattage", "latitude", "longitude"], rows)

    rows = []
    for c, (_, _, box) in enumerate(COMMUNITIES):
        for i in range(60 - 15 * c):
            lat, lon = inside(rng, box)
            rows.append([f"TR{c}{i:03d}", lat, lon])
    write_csv("trees.csv", ["id", "latitude", "longitude"], rows)

    # traffic incidents: tight blobs around each hot spot plus background
    rows = []
    n = 0
    for c, (lat0, lon0) in enumerate(HOTSPOTS):
        for _ in range(70 + 20 * c):
            rows.append([f"TI{n:04d}", rng.choice(DESCRIPTIONS), month_date(rng),
                         round(lat0 + rng.gauss(0, 0.002), 6), round(lon0 + rng.gauss(0, 0.003), 6)])
            n += 1
    for _ in range(30):
        _, _, box = COMMUNITIES[rng.randrange(3)]
        lat, lon = inside(rng, box)
        rows.append([f"TI{n:04d}", rng.choice(DESCRIPTIONS), month_date(rng), lat, lon])
        n += 1
    rows.append(rows[5])  # exact duplicate, removed at ingest
    write_csv("traffic_incidents.csv", ["id", "description", "start_date", "latitude", "longitude"], rows)

    # crime: community names only, monthly counts per category
    rows = []
    for c, (name, _, _) in enumerate(COMMUNITIES):
        for year in (2018, 2019, 2020):
            for month in range(1, 13):
                for k, cat in enumerate(CRIME_CATEGORIES):
                    count = "" if rng.random() < 0.03 else rng.randint(0, 3 + 2 * c + k)
                    rows.append([name, cat, count, f"{year:04d}-{month:02d}"])
    write_csv("crime.csv", ["community", "category", "count", "date"], rows)

    rows = []
    for c, (name, _, _) in enumerate(COMMUNITIES):
        for year in (2018, 2019, 2020):
            for month in range(1, 13):
                rows.append([name, rng.randint(1, 6 + 3 * c), f"{year:04d}-{month:02d}"])
    write_csv("disorder.csv", ["community", "count", "date"], rows)

    rows = []
    for c, (name, _, _) in enumerate(COMMUNITIES):
        for i in range(30 + 10 * c):
            rows.append([f"PT{c}{i:03d}", name, rng.choice(["Cat", "Dog", "Dog"])])
    write_csv("pets.csv", ["id", "community", "species"], rows)

    rows = []
    for c, (name, _, _) in enumerate(COMMUNITIES):
        pop = 4000 + 2500 * c + rng.randint(0, 500)
        male = pop // 2 + rng.randint(-200, 200)
        dwell = pop // 3
        rows.append([name, pop, male, pop - male, dwell, dwell // (4 - c), rng.randint(300, 900)])
    write_csv("census.csv", ["community", "population", "male", "female", "dwellings", "apartments", "children"],
              rows)

    write_config()


def write_config():
    latlon = {"latitude": "real", "longitude": "real"}
    cfg = {
        "seed": 42,
        "boundaries": {"path": "boundaries.geojson", "name_property": "name", "sector_property": "sector"},
        "datasets": {
            "streetlights": {
                "path": "streetlights.csv",
                "schema": {"id": "text", "wattage": "real", **latlon},
                "policy": {"drop_null": ["latitude", "longitude"]},
            },
            "trees": {
                "path": "trees.csv",
                "schema": {"id": "text", **latlon},
                "policy": {"drop_null": ["latitude", "longitude"]},
            },
            "traffic_incidents": {
                "path": "traffic_incidents.csv",
                "schema": {"id": "text", "description": "text", "start_date": "date", **latlon},
                "policy": {"drop_null": ["latitude", "longitude"]},
                "categorize": {"description": "description", "category": "category"},
                "date_column": "start_date",
                "category_column": "category",
            },
            "crime": {
                "path": "crime.csv",
                "schema": {"community": "text", "category": "text", "count": "integer", "date": "date"},
                "policy": {"zero_fill": ["count"]},
                "date_column": "date",
                "category_column": "category",
                "count_column": "count",
            },
            "disorder": {
                "path": "disorder.csv",
                "schema": {"community": "text", "count": "integer", "date": "date"},
                "policy": {"zero_fill": ["count"]},
                "date_column": "date",
                "count_column": "count",
            },
            "pets": {
                "path": "pets.csv",
                "schema": {"id": "text", "community": "text", "species": "text"},
            },
            "census": {
                "path": "census.csv",
                "schema": {"community": "text", "population": "integer", "male": "integer", "female": "integer",
                           "dwellings": "integer", "apartments": "integer", "children": "integer"},
            },
        },
        "features": {"census_passthrough": ["children"]},
        "model": {"alpha": 0.05, "bins": 2, "test_fraction": 0.2, "forest": {"n_trees": 50}},
        "cluster": {
            "dataset": "traffic_incidents",
            "id_column": "id",
            "sample_size": 3000,
            "runs": [
                {"algo": "kmeans", "grid": {"k": {"from": 2, "to": 8, "step": 1}, "n_init": [10]}},
                {"algo": "clarans", "grid": {"k": [2, 3, 4], "numlocal": [2], "maxneighbor": [40]}},
                {"algo": "dbscan", "grid": {"eps": [0.004, 0.006, 0.01], "min_pts": [5, 10]}},
                {"algo": "optics", "grid": {"eps": [0.02], "min_pts": [5, 10], "extraction_eps": [0.006, 0.01]}},
                {"algo": "agglo", "grid": {"n_clusters": [2, 3, 4], "linkage": ["ward", "complete", "average"]}},
                {"algo": "clique", "grid": {"intervals": [5, 10], "threshold": [0, 2]}},
            ],
        },
        "choropleth": {"metrics": ["crime_total", "traffic_incident_count", "streetlight_count"], "bins": 3},
        "top": {"k": 10},
    }
    (OUT / "config.json").write_text(json.dumps(cfg, indent=2) + "\n")


if __name__ == "__main__":
    main()
