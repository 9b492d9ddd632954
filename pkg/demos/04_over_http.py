"""
The same detector against a search service over HTTP
====================================================

Serve the simulator on a local port and query it through the HTTP adapter.
Findings match the in-process run exactly.
"""

import threading

from missedrecall.adapter import HttpBackend
from missedrecall.generation import generate_template
from missedrecall.pipeline import ExecutionSettings, detect, generate_groups
from missedrecall.sim import SimBackend, make_server
from missedrecall.sim.fixtures import FIXTURE_PAGE, FIXTURE_TIME, seeded_fixture

catalog, config = seeded_fixture()
backend = SimBackend(catalog, config)
groups = generate_groups(catalog, generate_template).groups
settings = ExecutionSettings(page_size=FIXTURE_PAGE, clock=lambda: FIXTURE_TIME)

server = make_server(backend, "127.0.0.1", 0)
threading.Thread(target=server.serve_forever, daemon=True).start()
url = "http://%s:%d" % server.server_address[:2]
print("serving on", url)

_, local, _ = detect(catalog, groups, backend, settings)
_, remote, _ = detect(catalog, groups, HttpBackend(url), settings)
server.shutdown()

print([f.id for f in local.findings])
print("identical:", [f.to_dict() for f in local.findings] == [f.to_dict() for f in remote.findings])
