"""Seeded fixture catalogs with planted missed-recall faults.

``seeded_fixture()`` is a hand-laid 50-shop district around two clusters:

* a "Freshside" brand cluster where the query "Freshside SPA" is
  mis-segmented onto the brand word and the SPA is crowded off the page;
* a barbecue street near the Fangbang landmark where "Fangbang" in
  "F's Seafood Barbecue (Fangbang)" is misread as a place.

Shop coordinates are pairwise distinct and no shop name contains a city
name, which is what makes every full-coverage query recall its own shop
when the faults are off.
"""

from __future__ import annotations

import math
import random
from datetime import datetime
from pathlib import Path

from ..catalog import Catalog, Shop, emit_catalog
from .engine import LANDMARK_MISPARSE, SEGMENTATION_MAIN_PART, FaultSpec, SimConfig

ORIGIN = (121.4700, 31.2300)
FANGBANG = (121.4900, 31.2250)
PEOPLES_SQUARE = (121.4750, 31.2330)
FIXTURE_TIME = datetime(2024, 3, 12, 14, 30)
FIXTURE_PAGE = 5


def offset(origin: tuple[float, float], east_m: float, north_m: float) -> tuple[float, float]:
    lat = origin[1] + north_m / 111_195.0
    lon = origin[0] + east_m / (111_195.0 * math.cos(math.radians(origin[1])))
    return (round(lon, 6), round(lat, 6))


_DAY = ((600, 1260),)  # 10:00-21:00

# (id, name, type, east_m, north_m, hours, active) relative to ORIGIN unless noted
_FRESHSIDE = [
    ("s01", "Freshside Laundry", "laundry", 220, 140),
    ("s02", "Freshside Massage", "massage", -310, 260),
    ("s03", "Freshside Nails", "nail salon", 420, -180),
    ("s04", "Freshside Dry Cleaning", "dry cleaning", -150, -390),
    ("s05", "Freshside Bakery", "bakery", 640, 320),
    ("s06", "Freshside Tea", "tea house", -560, 90),
    ("s07", "Freshside Healthy SPA", "SPA", 0, 0),
]

_BARBECUE = [  # relative to FANGBANG
    ("s08", "Smoky Grill House", "barbecue", 80, 40),
    ("s09", "Old Lane Skewers", "barbecue", -120, 90),
    ("s10", "Red Lantern Grill", "barbecue", 150, -110),
    ("s11", "Charcoal King", "barbecue", -60, -200),
    ("s12", "Night Market Skewers", "barbecue", 260, 130),
    ("s13", "Ember Yard", "barbecue", -280, 160),
    ("s14", "F's Seafood Barbecue (Fangbang)", "barbecue", 1200, 0),
]

_OTHERS = [
    ("s15", "Chen's hardware", "hardware store", 900, 700, None, True),
    ("s16", "Ma's burgers", "fast food", -800, 650, _DAY, True),
    ("s17", "Lily Hair Studio", "hairdressing salon", 1300, -300, _DAY, True),
    ("s18", "Blue Lotus SPA", "SPA", 2100, 900, _DAY, True),
    ("s19", "Old Flavor Hotpot (People's Square)", "Beijing hotpot", 500, 400, _DAY, True),
    ("s20", "Ali's curry house", "Indian restaurant", -1400, -800, _DAY, True),
    ("s21", "Golden Spoon Dumplings", "dumpling restaurant", 1700, 1200, _DAY, True),
    ("s22", "Happy Paws Pet Store", "pet store", -1900, 300, None, True),
    ("s23", "Morning Dew Florist", "florist", 300, 1800, _DAY, True),
    ("s24", "Pearl Nail Bar", "nail salon", -600, -1500, _DAY, True),
    ("s25", "Sunrise Noodle House", "noodle restaurant", 2300, -600, _DAY, True),
    ("s26", "Green Leaf Pharmacy", "pharmacy", -2200, -1300, None, True),
    ("s27", "Bright Smile Dental", "dental clinic", 1000, -1700, _DAY, True),
    ("s28", "Iron Temple Gym", "gym", -300, 2200, None, True),
    ("s29", "Jade Garden Restaurant", "Cantonese restaurant", 1600, 2000, _DAY, True),
    ("s30", "Little Sheep Hotpot", "Beijing hotpot", -1000, 1500, _DAY, True),
    ("s31", "Cozy Corner Cafe", "cafe", 700, -900, _DAY, True),
    ("s32", "Silver Scissors Barber", "barber shop", -1200, 1000, _DAY, True),
    ("s33", "Twin Dragons Tea", "tea house", 2500, 300, _DAY, True),
    ("s34", "Maple Bakery", "bakery", -2400, 800, _DAY, True),
    ("s35", "Happy Wash Laundry", "laundry", 1900, -1100, None, True),
    ("s36", "Zen Foot Massage", "massage", -700, -2300, _DAY, True),
    ("s37", "Lucky Star Karaoke", "karaoke", 2700, 1500, _DAY, True),
    ("s38", "Peach Blossom Beauty", "beauty salon", -2600, -400, _DAY, True),
    ("s39", "Northern Wheat Buns", "bakery", 400, -2600, _DAY, True),
    ("s40", "Harbor Fish Market", "seafood market", -1500, 2400, _DAY, True),
    ("s41", "老味道火锅", "北京火锅", 1100, 2600, _DAY, True),
    ("s42", "小林理发", "理发店", -2800, 1900, _DAY, True),
    ("s43", "Willow Bookstore", "bookstore", 2900, -2000, _DAY, True),
    ("s44", "Quick Fix Phone Repair", "phone repair", -1700, -2700, None, True),
    ("s45", "Sweet Bean Desserts", "dessert shop", 3100, 2400, _DAY, True),
    ("s46", "Moonlight Bar", "bar", -3000, -2500, ((1080, 1440),), True),
    ("s47", "Sunset Video Rental", "video rental", 3300, -2600, None, False),
    ("s48", "Bakery", "Bakery", 3500, 900, _DAY, True),
    ("s49", "Orchid Yoga Studio", "yoga studio", -3400, 1100, _DAY, True),
    ("s50", "Copper Pot Kitchen", "home cooking", 600, 3300, _DAY, True),
]


def seeded_catalog() -> Catalog:
    shops = []
    for sid, name, stype, e, n in _FRESHSIDE:
        lon, lat = offset(ORIGIN, e, n)
        shops.append(Shop(sid, name, stype, "Shanghai", lon, lat, _DAY))
    for sid, name, stype, e, n in _BARBECUE:
        lon, lat = offset(FANGBANG, e, n)
        shops.append(Shop(sid, name, stype, "Shanghai", lon, lat, _DAY))
    for sid, name, stype, e, n, hours, active in _OTHERS:
        lon, lat = offset(ORIGIN, e, n)
        city = "" if sid == "s48" else ("上海" if sid in ("s41", "s42") else "Shanghai")
        shops.append(Shop(sid, name, stype, city, lon, lat, hours, active))
    return Catalog(shops, source="seeded-fixture")


SEGMENTATION_FAULT = FaultSpec(SEGMENTATION_MAIN_PART, "Freshside", query_pattern="freshside spa")
LANDMARK_FAULT = FaultSpec(LANDMARK_MISPARSE, "Fangbang")


def seeded_config(faults: bool = True) -> SimConfig:
    return SimConfig(
        page_cap=FIXTURE_PAGE,
        radius_m=3000.0,
        faults=(SEGMENTATION_FAULT, LANDMARK_FAULT) if faults else (),
        landmarks={"Fangbang": FANGBANG, "People's Square": PEOPLES_SQUARE},
        seed=7,
    )


def seeded_fixture(faults: bool = True) -> tuple[Catalog, SimConfig]:
    return seeded_catalog(), seeded_config(faults)


# queries the faults are planted on, as (shop id, query text)
PLANTED = (
    ("s07", "Freshside SPA"),
    ("s14", "Fangbang"),
    ("s14", "barbecue Fangbang"),
)


_BRANDS = ("Amber", "Birch", "Cedar", "Dawn", "Echo", "Fern", "Glow", "Harbor", "Ivy", "Juniper",
           "Kite", "Lark", "Meadow", "Nova", "Oak", "Pine", "Quill", "River", "Sage", "Tide",
           "Umber", "Vale", "Willow", "Yarrow", "Zephyr")
_KINDS = (("Hotpot", "hotpot"), ("Salon", "hairdressing salon"), ("Nails", "nail salon"),
          ("Grill", "barbecue"), ("Cafe", "cafe"), ("Dumplings", "dumpling restaurant"),
          ("Laundry", "laundry"), ("Massage", "massage"), ("Bakery", "bakery"),
          ("Noodles", "noodle restaurant"), ("Pharmacy", "pharmacy"), ("Florist", "florist"))


def synthetic_fixture(n: int = 600, seed: int = 7) -> tuple[Catalog, SimConfig]:
    """``n`` shops: the seeded 50 plus random brand/kind shops scattered over ~8 km."""
    rng = random.Random(seed)
    base = seeded_catalog()
    shops = list(base.shops)
    used = {(s.lon, s.lat) for s in shops}
    i = len(shops)
    while len(shops) < n:
        i += 1
        brand = rng.choice(_BRANDS)
        word, stype = rng.choice(_KINDS)
        extra = rng.random() < 0.3
        name = f"{brand} {word}" + (f" ({rng.choice(_BRANDS)} Road)" if extra else "")
        lon, lat = offset(ORIGIN, rng.uniform(-4000, 4000), rng.uniform(-4000, 4000))
        if (lon, lat) in used:
            continue
        used.add((lon, lat))
        hours = None if rng.random() < 0.3 else _DAY
        active = rng.random() > 0.02
        shops.append(Shop(f"r{i:04d}", name, stype, "Shanghai", lon, lat, hours, active))
    return Catalog(shops, source=f"synthetic-{n}-{seed}"), seeded_config(True)


def write_fixture(directory, faults: bool = True) -> tuple[Path, Path]:
    import json

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    catalog, config = seeded_fixture(faults)
    cat_path = directory / "fixture_catalog.csv"
    cfg_path = directory / ("fixture_sim.json" if faults else "fixture_sim_nofault.json")
    cat_path.write_bytes(emit_catalog(catalog, "csv"))
    cfg_path.write_text(json.dumps(config.to_dict(), ensure_ascii=False, indent=2) + "\n",
                        encoding="utf-8")
    return cat_path, cfg_path


DATA_DIR = Path(__file__).parent / "data"
