import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import edge, mel, scenario, sensor
from edgesim.scenario import ScenarioError, expand_entities, load_scenario, parse_scenario, scenario_from_dict


def _paths(exc):
    return [p for p, _ in exc.value.errors]


def test_iot_fragment_parses_and_expands(fragment_text):
    cfg = parse_scenario(fragment_text)
    pop = expand_entities(cfg)
    assert [d.id for d in pop.iot] == [f"temperature-{k}" for k in range(5)]
    for d in pop.iot:
        assert d.network_protocol.name == "wifi" and d.iot_protocol.name == "xmpp"
        assert d.battery.max_capacity == d.battery.current_level == 100.0
        assert d.data_size_per_generation == 1.0 and d.assignment_id == "1"
    assert pop.edges == [] and pop.graph.mels == {}


def test_empty_document_is_valid():
    cfg = parse_scenario("{}")
    pop = expand_entities(cfg)
    assert (pop.iot, pop.edges) == ([], [])


def test_shrink_factor_out_of_bounds_reports_path():
    doc = scenario([sensor()], [edge()], [mel(1, "E", rho=1.5, assignment=1)])
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert "melGraph.0.shrinkingFactor" in _paths(err)


def test_json_syntax_error_has_position():
    with pytest.raises(ScenarioError) as err:
        parse_scenario('{"name": "x",\n "run": {')
    assert _paths(err)[0].startswith("line 2 column")


def test_unknown_fields_rejected():
    doc = scenario([sensor()], [edge()], [mel(1, "E", assignment=1)])
    doc["iOTDeviceEntities"][0]["colour"] = "red"
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert "iOTDeviceEntities.0.colour" in _paths(err)


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["iOTDeviceEntities"][0]["networkModelEntity"].update(networkType="carrier-pigeon"),
     "iOTDeviceEntities.0.networkModelEntity.networkType"),
    (lambda d: d["edgeDeviceEntities"][0]["ioTProtocols"].append("smoke"), "edgeDeviceEntities.0.ioTProtocols.0"),
    (lambda d: d["melGraph"][0].update(hostEdge="nowhere"), "melGraph.0.hostEdge"),
    (lambda d: d["melGraph"][0]["downLink"].append(9), "melGraph.0.downLink.0"),
    (lambda d: d["iOTDeviceEntities"][0].update(assignmentId=7), "iOTDeviceEntities.0.assignmentId"),
    (lambda d: d["edgeDeviceEntities"][0].update(numberofEntity=2), "melGraph.0.hostEdge"),
    (lambda d: d["edgeDeviceEntities"][0].update(signalRange=0), "edgeDeviceEntities.0"),
])
def test_reference_errors_point_at_the_field(mutate, path):
    doc = scenario([sensor()], [edge()], [mel(1, "E", assignment=1)])
    mutate(doc)
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert path in _paths(err)


def test_cycle_rejected_with_members():
    doc = scenario([sensor()], [edge()], [mel(1, "E", down=[2], assignment=1), mel(2, "E", down=[1])])
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert err.value.errors[0][0] == "melGraph" and "cycle" in err.value.errors[0][1]


def test_unbounded_run_rejected_without_drain():
    doc = scenario([sensor(drain=0.0)], [edge()], [mel(1, "E", assignment=1)])
    with pytest.raises(ScenarioError):
        scenario_from_dict(doc)
    doc["run"]["horizon"] = 10.0
    scenario_from_dict(doc)


def test_duplicate_template_names_rejected():
    doc = scenario([sensor(name="E")], [edge(name="E")], [mel(1, "E", assignment=1)])
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert "edgeDeviceEntities.0.name" in _paths(err)


def test_expansion_counts_and_ids():
    doc = scenario([sensor(name="a", count=3), sensor(name="b", count=2)], [edge()], [mel(1, "E", assignment=1)])
    pop = expand_entities(scenario_from_dict(doc))
    ids = [d.id for d in pop.iot]
    assert ids == ["a-0", "a-1", "a-2", "b-0", "b-1"] and len(set(ids)) == 5
    assert pop.edges[0].hosted_mels == ["1"]


def test_network_aliases_and_catalog_override():
    doc = scenario([sensor(net="Wi-Fi (802.11p)", proto="CoAP")], [edge(nets=("802.11p",))], [mel(1, "E", assignment=1)])
    doc["protocolCatalog"] = {"ioTProtocols": [{"name": "coap", "headerSize": 9, "energyCoefficient": 2.0}]}
    d = expand_entities(scenario_from_dict(doc)).iot[0]
    assert d.network_protocol.name == "wifi"
    assert (d.iot_protocol.header_size, d.iot_protocol.energy_coefficient) == (9, 2.0)


def test_load_scenario_reads_file(tmp_path, fragment_text):
    p = tmp_path / "fragment.json"
    p.write_text(fragment_text, encoding="utf-8")
    assert len(expand_entities(load_scenario(str(p))).iot) == 5


@given(st.integers(1, 50))
@settings(max_examples=20)
def test_population_size_matches_counts(n):
    doc = scenario([sensor(count=n)], [edge()], [mel(1, "E", assignment=1)])
    assert len(expand_entities(scenario_from_dict(doc)).iot) == n


_num = st.floats(0.1, 100, allow_nan=False, allow_infinity=False)


@st.composite
def _documents(draw):
    n_edges = draw(st.integers(1, 3))
    edges = [edge(name=f"E{i}", x=draw(_num), rng=draw(_num), capacity=draw(st.integers(0, 5)),
                  mips=draw(_num), battery=draw(st.none() | _num)) for i in range(n_edges)]
    mels = [mel(i, f"E{draw(st.integers(0, n_edges - 1))}", rho=draw(st.floats(0, 1)), instr=draw(_num),
                down=[i + 1] if i + 1 < n_edges else [], assignment=1 if i == 0 else None)
            for i in range(n_edges)]
    iot = [sensor(name=f"s{i}", x=draw(_num), count=draw(st.integers(1, 4)), battery=draw(_num),
                  drain=draw(_num), size=draw(_num), freq=draw(_num),
                  velocity=draw(st.none() | st.tuples(_num, _num))) for i in range(draw(st.integers(0, 3)))]
    return scenario(iot, edges, mels, seed=draw(st.integers(0, 2**31)), horizon=draw(st.none() | _num))


@given(_documents())
def test_parse_serialize_parse_round_trip(doc):
    cfg = scenario_from_dict(doc)
    again = parse_scenario(cfg.to_json())
    assert again == cfg
    assert json.loads(again.to_json()) == cfg.to_dict()
