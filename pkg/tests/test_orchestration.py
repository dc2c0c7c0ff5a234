import pytest

from conftest import edge, mel, scenario, sensor
from edgesim.devices import (
    Battery,
    EdgeDeviceState,
    IoTDeviceState,
    Location,
    MobilityState,
    SignalRange,
    transmission_time,
)
from edgesim.graph import MEL, EdgeLet
from edgesim.kernel import EventKind
from edgesim.orchestration import (
    ConnectionTable,
    ProcessingQueue,
    Simulation,
    establish_connection,
    select_edge,
    submit_edgelet,
)
from edgesim.protocols import IOT_PROTOCOLS, NETWORK_PROTOCOLS
from edgesim.scenario import scenario_from_dict


def _edge_state(eid, x, rng=100.0, capacity=10, nets=("bluetooth",), enabled=True):
    return EdgeDeviceState(
        id=eid, device_type="pi", mobility=MobilityState(False, Location(x, 0, 0), 0.0, 0.0),
        signal_range=SignalRange(rng, rng), max_iot_capacity=capacity, mips=10000.0, ram=0.0,
        bandwidth=10000.0, network_protocols=nets, enabled=enabled,
    )


def _iot_state(iid="d", x=0.0, net="bluetooth"):
    return IoTDeviceState(
        id=iid, iot_type="t", mobility=MobilityState(False, Location(x, 0, 0), 0.0, 0.0),
        battery=Battery(300.0, 300.0, 0.0, 1.0), data_frequency=1.0, data_generation_time=1.0,
        data_size_per_generation=1.0, network_protocol=NETWORK_PROTOCOLS[net],
        iot_protocol=IOT_PROTOCOLS["coap"], assignment_id="1",
    )


def _run(doc, trace=False):
    sim = Simulation(scenario_from_dict(doc), trace=trace)
    return sim, sim.run()


# -- connection establishment ---------------------------------------------------

def test_ack_for_table_geometry():
    table = ConnectionTable()
    res = establish_connection(_iot_state(), table, [_edge_state("E1", 100.0)])
    assert res.ack and res.edge_id == "E1"
    assert table.active("d").edge_id == "E1"


def test_nack_reasons():
    full = _edge_state("E1", 100.0, capacity=1)
    table = ConnectionTable()
    assert establish_connection(_iot_state("a"), table, [full]).ack
    assert establish_connection(_iot_state("b"), table, [full]).reason == "capacity"
    assert establish_connection(_iot_state(), ConnectionTable(), [_edge_state("E1", 150.0)]).reason == "out-of-range"
    wifi_only = _edge_state("E1", 10.0, nets=("wifi",))
    assert establish_connection(_iot_state(), ConnectionTable(), [wifi_only]).reason == "protocol-mismatch"
    off = _edge_state("E1", 10.0, enabled=False)
    assert establish_connection(_iot_state(), ConnectionTable(), [off]).reason == "no-edge"


def test_select_nearest_edge():
    edges = [_edge_state("far", 30.0), _edge_state("near", -10.0)]
    assert select_edge(_iot_state(), edges) == "near"
    tie = [_edge_state("b", 10.0), _edge_state("a", -10.0)]
    assert select_edge(_iot_state(), tie) == "a"
    assert select_edge(_iot_state(), [_edge_state("x", 10.0, enabled=False)]) is None
    assert select_edge(_iot_state(), [_edge_state("x", 10.0, nets=("wifi",))]) is None


# -- queueing -------------------------------------------------------------------

def test_fifo_queue_hand_simulated():
    m = MEL("m", "E", 0.5, 10000.0)
    q = ProcessingQueue()
    assert submit_edgelet(EdgeLet(0, 1.0, "d", "m", 10.0), q, m, 10000.0, 10.0) == 11.0
    q2 = ProcessingQueue()
    done = [submit_edgelet(EdgeLet(i, 1.0, "d", "m", 10.0), q2, m, 10000.0, 10.0) for i in range(2)]
    assert done == [11.0, 12.0]


def test_completion_order_equals_arrival_order_per_edge():
    doc = scenario([sensor(name="s", count=4, battery=5.0, size=0.5)],
                   [edge("E", x=0.0, mips=200.0)], [mel(1, "E", instr=300.0, assignment=1)])
    sim, _ = _run(doc, trace=True)
    arrivals = [e.payload.id for e in sim.kernel.trace if e.kind is EventKind.EDGELET_ARRIVAL]
    done = [e.payload.edgelet.id for e in sim.kernel.trace if e.kind is EventKind.PROCESSING_COMPLETE]
    assert done == arrivals and len(done) == 40


def test_more_devices_on_one_edge_raise_latency():
    def latency(n):
        doc = scenario([sensor(count=n, battery=20.0)], [edge(mips=1000.0)], [mel(1, "E", instr=20.0, assignment=1)])
        return _run(doc)[1].mean_latency

    assert latency(50) > latency(1)


def test_execution_and_latency_hand_traced():
    # 1 MB over wifi, 1 s of processing, 0.5 MB back
    doc = scenario([sensor(battery=1.0)], [edge(mips=1000.0)], [mel(1, "E", rho=0.5, instr=1000.0, assignment=1)])
    _, r = _run(doc)
    net, proto = NETWORK_PROTOCOLS["wifi"], IOT_PROTOCOLS["coap"]
    [resp] = r.responses
    up, down = transmission_time(1.0, net, proto), transmission_time(0.5, net, proto)
    assert resp.execution_time == pytest.approx(1.0, rel=1e-12)
    assert resp.latency == pytest.approx(up + 1.0 + down, rel=1e-12)
    assert (r.generated, r.delivered, r.termination) == (1, 1, "exhausted")


def test_chain_across_edges_uses_backhaul_and_both_mels():
    doc = scenario([sensor(battery=1.0)], [edge("A", x=0.0, mips=1000.0), edge("B", x=500.0, mips=1000.0)],
                   [mel(1, "A", rho=0.5, instr=1000.0, down=[2], assignment=1), mel(2, "B", rho=0.2, instr=1000.0)])
    _, r = _run(doc)
    [resp] = r.responses
    backhaul = 0.5 * 8e6 / (1000.0 * 1e6)  # 0.5 MB over the 1000 Mbps edge link
    assert resp.execution_time == pytest.approx(1.0 + backhaul + 0.5, rel=1e-12)
    assert [d.edgelets for d in r.devices if d.kind == "edge"] == [1, 1]


def test_fan_out_counts_one_request_and_returns_every_branch():
    doc = scenario([sensor(battery=2.0)], [edge()],
                   [mel(1, "E", down=[2, 3], assignment=1), mel(2, "E"), mel(3, "E")])
    _, r = _run(doc)
    assert (r.generated, r.delivered, len(r.responses)) == (2, 2, 4)
    per_request = [x.request_id for x in r.responses]
    assert sorted(per_request.count(q) for q in set(per_request)) == [2, 2]


# -- mobility -----------------------------------------------------------------------

def test_static_devices_schedule_no_tracking():
    sim, _ = _run(scenario([sensor(battery=3.0)], [edge()], [mel(1, "E", assignment=1)]), trace=True)
    assert not [e for e in sim.kernel.trace if e.kind is EventKind.LOCATION_UPDATE]


def test_car_leaves_range_on_first_tick_past_boundary():
    doc = scenario([sensor(battery=70.0, size=0.4, proto="xmpp", velocity=(0.5, 0.0))],
                   [edge("R1", x=0.0, rng=50.0), edge("R2", x=50.0, rng=50.0)],
                   [mel(1, "R1", assignment=1), mel(2, "R2", assignment=1)], trackingInterval=0.25)
    _, r = _run(doc)
    [h] = r.handoff_log
    assert (h.time, h.from_edge, h.to_edge, h.cause) == (100.25, "R1-0", "R2-0", "mobility")


def test_leaving_coverage_without_alternative_discards_requests():
    doc = scenario([sensor(battery=30.0, velocity=(5.0, 0.0))], [edge("E", x=0.0, rng=50.0)],
                   [mel(1, "E", assignment=1)], trackingInterval=1.0)
    _, r = _run(doc)
    assert r.discarded > 0 and r.handoffs == 0
    assert r.delivered + r.discarded + r.undelivered + r.in_flight == r.generated == 30


def test_result_for_a_device_that_left_coverage_is_undelivered():
    # 20 s per sample; the device leaves at t=6, before the first result
    doc = scenario([sensor(battery=100.0, velocity=(10.0, 0.0))], [edge("E", x=0.0, rng=50.0, mips=50.0)],
                   [mel(1, "E", instr=1000.0, assignment=1)])
    _, r = _run(doc)
    assert (r.generated, r.undelivered, r.discarded, r.delivered, r.relays) == (100, 6, 94, 0, 0)


def test_moving_edge_rechecks_its_devices():
    doc = scenario([sensor(battery=20.0)], [edge("E", x=0.0, rng=10.0), edge("F", x=15.0, rng=20.0)],
                   [mel(1, "E", assignment=1), mel(2, "F", assignment=1)])
    doc["edgeDeviceEntities"][0]["mobilityEntity"] = {"movable": True, "location": {"x": 0.0},
                                                      "velocity": {"x": 2.0, "y": 0.0}}
    _, r = _run(doc)
    assert [(h.from_edge, h.to_edge, h.cause) for h in r.handoff_log] == [("E-0", "F-0", "edge-moved")]


# -- edge depletion ----------------------------------------------------------------------

def _depleting(with_backup_mel):
    mels = [mel(1, "A", rho=0.5, assignment=1)]
    if with_backup_mel:
        mels.append(mel(2, "B", rho=0.5, assignment=1))
    # A's pack covers exactly one job (1 MB at rho 0.5: 0.35 units)
    return scenario([sensor(count=4, battery=1.0)],
                    [edge("A", x=0.0, battery=0.35, mips=1000.0), edge("B", x=10.0, mips=1000.0)], mels)


def test_depleted_edge_hands_queue_to_alternative():
    _, r = _run(_depleting(True))
    a, b = r.device("A-0"), r.device("B-0")
    assert a.depleted_at == pytest.approx(1.0 + transmission_time(1.0, NETWORK_PROTOCOLS["wifi"], IOT_PROTOCOLS["coap"]))
    assert (a.edgelets, b.edgelets) == (1, 3)
    assert (r.delivered, r.discarded) == (4, 0)
    assert {x.delivering_edge for x in r.responses} == {"A-0", "B-0"}


def test_depleted_edge_without_alternative_discards_queue():
    _, r = _run(_depleting(False))
    assert (r.delivered, r.discarded, r.generated) == (1, 3, 4)
    assert r.termination == "exhausted"


def test_all_edges_disabled_stops_the_run():
    doc = scenario([sensor(count=2, battery=50.0)], [edge("A", battery=0.35, mips=1000.0)],
                   [mel(1, "A", rho=0.5, assignment=1)])
    _, r = _run(doc)
    assert r.termination == "all-edges-disabled"
    assert r.delivered + r.discarded + r.undelivered + r.in_flight == r.generated


def test_mains_powered_edge_never_detaches():
    _, r = _run(scenario([sensor(battery=50.0)], [edge()], [mel(1, "E", assignment=1)]))
    e = r.device("E-0")
    assert (e.depleted_at, e.energy_consumed, e.battery_hours, e.edgelets) == (None, 0.0, None, 50)


# -- termination ------------------------------------------------------------------------

def test_no_devices_terminates_at_zero():
    _, r = _run(scenario([], [edge()], []))
    assert (r.final_time, r.events, r.generated, r.responses) == (0.0, 0, 0, [])


def test_horizon_leaves_requests_in_flight():
    doc = scenario([sensor(battery=100.0)], [edge(mips=100.0)], [mel(1, "E", instr=1000.0, assignment=1)], horizon=30.5)
    _, r = _run(doc)
    assert r.termination == "horizon" and r.final_time == 30.5
    assert r.generated == 31 and r.in_flight > 0
    assert r.delivered + r.in_flight == r.generated


def test_stop_on_iot_depletion():
    doc = scenario([sensor(battery=3.0)], [edge(mips=100.0)], [mel(1, "E", instr=1000.0, assignment=1)],
                   stopOnIotDepletion=True)
    _, r = _run(doc)
    assert (r.termination, r.final_time, r.generated) == ("iot-depleted", 2.0, 3)
    assert r.in_flight == 3


def test_battery_hours_for_depleted_and_surviving_devices():
    doc = scenario([sensor(name="a", battery=3.0), sensor(name="b", battery=100.0, drain=0.5)], [edge()],
                   [mel(1, "E", assignment=1)], horizon=10.0)
    _, r = _run(doc)
    assert r.device("a-0").battery_hours == 2.0
    # the horizon event precedes the t=10 sample: 10 samples at 0.5 units
    assert r.device("b-0").battery_hours == pytest.approx(100.0 * 10.0 / 5.0)


def test_jitter_is_seeded():
    def latencies(seed):
        doc = scenario([sensor(count=3, battery=20.0)], [edge()], [mel(1, "E", assignment=1)],
                       generationJitter=0.3, seed=seed)
        return [x.created_at for x in _run(doc)[1].responses]

    assert latencies(1) == latencies(1)
    assert latencies(1) != latencies(2)
