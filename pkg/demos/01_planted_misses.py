"""
Finding planted missed recalls in a toy search engine
=====================================================

Build the 50-shop fixture, switch on two faults, and let the consistency
oracle find the queries that no longer recall their shop.
"""

from missedrecall.generation import generate_template
from missedrecall.pipeline import ExecutionSettings, detect, generate_groups
from missedrecall.sim import SimBackend, ground_truth_misses
from missedrecall.sim.fixtures import FIXTURE_PAGE, FIXTURE_TIME, seeded_fixture

catalog, config = seeded_fixture(faults=True)
print(len(catalog), "shops;", [f.kind for f in config.faults])

# one group of equivalent queries per shop
groups = generate_groups(catalog, generate_template).groups
print(groups[6].target_shop_id, [q.text for q in groups[6].queries])

# search from each shop's own location, mid-afternoon
settings = ExecutionSettings(page_size=FIXTURE_PAGE, clock=lambda: FIXTURE_TIME)
outcomes, evaluation, metrics = detect(catalog, groups, SimBackend(catalog, config), settings)
print(evaluation.counts)

for f in evaluation.findings:
    print(f"{f.target_shop_id}: {f.failing_query.text!r} missed, "
          f"while {f.witnesses[0].text!r} found it")

# the simulator knows which misses it planted
truth = ground_truth_misses(catalog, groups, config, settings.context_for)
print("matches ground truth:",
      {(m.shop_id, m.query_text) for m in truth}
      == {(f.target_shop_id, f.failing_query.text) for f in evaluation.findings})

# without faults the same groups are consistent
_, clean, _ = detect(catalog, groups, SimBackend(catalog, config.without_faults()), settings)
print("findings without faults:", len(clean.findings))
