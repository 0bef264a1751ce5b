import json
import logging
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from component_miner.errors import InputError
from component_miner.graph import (
    DependencyEdge,
    DependencyGraph,
    Element,
    enumerate_execution_orders,
    graph_to_dot,
    graph_to_json,
    ingest_invocation_log,
    load_graph,
    parse_dot_graph,
    parse_json_graph,
)
from oracles import count_orders_bruteforce, count_orders_formula, random_graph_data


def _json_doc(elements, edges):
    return json.dumps(
        {
            "elements": elements,
            "edges": [{"source": s, "target": t, "weight": w} for (s, t), w in edges.items()],
        }
    )


class TestJson:
    def test_empty(self):
        g = parse_json_graph('{"elements":[],"edges":[]}')
        assert len(g) == 0
        assert g.edges == ()

    def test_hr_portal_tiers(self, hr_graph):
        assert len(hr_graph) == 13
        tiers = Counter(el.container for el in hr_graph.elements)
        assert tiers == {"WBR": 5, "BR": 3, "DAO": 5}

    def test_duplicate_edges_are_summed(self):
        text = json.dumps(
            {
                "elements": [{"id": "A"}, {"id": "B"}],
                "edges": [
                    {"source": "A", "target": "B", "weight": 2},
                    {"source": "A", "target": "B", "weight": 3},
                ],
            }
        )
        # oracle: group by (source, target) and sum
        raw = [("A", "B", 2), ("A", "B", 3)]
        expected = Counter()
        for s, t, w in raw:
            expected[s, t] += w
        g = parse_json_graph(text)
        assert [(e.source, e.target, e.weight) for e in g.edges] == [("A", "B", expected["A", "B"])]
        assert expected["A", "B"] == 5

    def test_self_edge_dropped_with_warning(self, caplog):
        text = _json_doc([{"id": "A"}, {"id": "B"}], {("A", "A"): 4, ("A", "B"): 1})
        with caplog.at_level(logging.WARNING):
            g = parse_json_graph(text)
        assert g.edges == (DependencyEdge("A", "B", 1),)
        assert "self-edge" in caplog.text

    def test_schema_field(self):
        assert len(parse_json_graph('{"schema":"depgraph/1","elements":[{"id":"x"}],"edges":[]}')) == 1
        with pytest.raises(InputError, match="schema"):
            parse_json_graph('{"schema":"depgraph/2","elements":[],"edges":[]}')

    @pytest.mark.parametrize(
        "text, where",
        [
            ('{"elements": [', "line 1, column 15"),
            ("[]", "$"),
            ('{"elements": {}, "edges": []}', "$.elements"),
            ('{"elements":[{"id":"A"}],"edges":[{"source":"A","target":"Z","weight":1}]}', "$.edges[0].target"),
            ('{"elements":[{"id":"A"},{"id":"B"}],"edges":[{"source":"A","target":"B","weight":0}]}',
             "$.edges[0].weight"),
            ('{"elements":[{"id":"A"},{"id":"B"}],"edges":[{"source":"A","target":"B","weight":1.5}]}',
             "$.edges[0].weight"),
            ('{"elements":[{"id":"A"},{"id":"A"}],"edges":[]}', "$.elements[1].id"),
            ('{"elements":[{"id":" A"}],"edges":[]}', "$.elements[0].id"),
            ('{"elements":[{"id":""}],"edges":[]}', "$.elements[0].id"),
            ('{"elements":[{"id":"A","methods":["m","m"]}],"edges":[]}', "$.elements[0]"),
        ],
    )
    def test_errors_carry_location(self, text, where):
        with pytest.raises(InputError) as info:
            parse_json_graph(text)
        assert info.value.location == where

    def test_round_trip_keeps_labels(self, hr_graph):
        assert parse_json_graph(graph_to_json(hr_graph)) == hr_graph
        assert hr_graph.element("web.LoginServlet").methods == ("login", "logout")


class TestDot:
    def test_empty(self):
        assert len(parse_dot_graph("digraph g {}")) == 0

    def test_single_edge(self):
        g = parse_dot_graph("digraph g { A -> B [weight=3]; }")
        assert g.ids == ("A", "B")
        assert g.edges == (DependencyEdge("A", "B", 3),)

    def test_repeated_statements_merge(self):
        text = "digraph g { A -> B; A -> B; }"
        # oracle: count duplicate edge statements
        statements = [s.strip() for s in text[text.index("{") + 1:text.rindex("}")].split(";") if s.strip()]
        g = parse_dot_graph(text)
        assert g.edges == (DependencyEdge("A", "B", statements.count("A -> B")),)
        assert g.weight("A", "B") == 2

    def test_chain_comments_and_quotes(self):
        text = """
        /* header */
        strict digraph "deps" {
          // tiers
          "DAO.EmployeeDao" [container=DAO, methods="find,save"];
          web.Login -> biz.Auth -> "DAO.EmployeeDao" [weight=2]
          # preprocessor-style line
          "a \\"quoted\\" id" -> web.Login
        }
        """
        g = parse_dot_graph(text)
        assert g.weight("web.Login", "biz.Auth") == 2
        assert g.weight("biz.Auth", "DAO.EmployeeDao") == 2
        assert g.weight('a "quoted" id', "web.Login") == 1
        dao = g.element("DAO.EmployeeDao")
        assert dao.container == "DAO" and dao.methods == ("find", "save")

    def test_unsupported_attributes_warn(self, caplog):
        text = "digraph g { rankdir=LR; node [shape=box]; A [color=red]; A -> B [label=x, weight=4]; }"
        with caplog.at_level(logging.WARNING):
            g = parse_dot_graph(text)
        assert g.weight("A", "B") == 4
        for word in ("rankdir", "node", "color", "label"):
            assert word in caplog.text

    def test_undirected_graph_rejected(self):
        with pytest.raises(InputError, match="undirected"):
            parse_dot_graph("graph g { A -- B; }")

    def test_undirected_edge_rejected(self):
        with pytest.raises(InputError, match="undirected"):
            parse_dot_graph("digraph g { A -- B; }")

    @pytest.mark.parametrize(
        "text, where",
        [
            ("digraph g {\n  A -> ;\n}", "line 2, column 8"),
            ("digraph g {\n  A -> B [weight=0];\n}", "line 2, column 18"),
            ("digraph g {\n  A -> B [weight=2.5];\n}", "line 2, column 18"),
            ("digraph g { A -> B", "end of input"),
            ("digraph g { A @ B }", "line 1, column 15"),
            ("digraph g { } extra", "line 1, column 15"),
        ],
    )
    def test_syntax_errors_have_position(self, text, where):
        with pytest.raises(InputError) as info:
            parse_dot_graph(text)
        assert info.value.location == where

    def test_round_trip_hr(self, hr_graph):
        assert parse_dot_graph(graph_to_dot(hr_graph)) == hr_graph


class TestCsv:
    def test_header_only(self):
        assert len(ingest_invocation_log("caller,callee,count\n")) == 0

    def test_counts_are_summed(self):
        g = ingest_invocation_log("caller,callee,count\nW1,D1,4\nW1,D1,6\n")
        assert g.edges == (DependencyEdge("W1", "D1", 10),)

    def test_self_edge(self):
        g = ingest_invocation_log("caller,callee,count\nA,A,5\n")
        assert g.ids == ("A",)
        assert g.edges == ()

    def test_count_defaults_to_one(self):
        g = ingest_invocation_log("caller,callee\nA,B\nA,B\nB,C\n")
        assert g.weight("A", "B") == 2 and g.weight("B", "C") == 1
        g = ingest_invocation_log("caller,callee,count\nA,B,\n")
        assert g.weight("A", "B") == 1

    @pytest.mark.parametrize(
        "text, where",
        [
            ("", "line 1"),
            ("A,B,1\n", "line 1"),
            ("caller,callee,count\n,B,1\n", "line 2"),
            ("caller,callee,count\nA,,1\n", "line 2"),
            ("caller,callee,count\nA,B,x\n", "line 2"),
            ("caller,callee,count\nA,B,1.5\n", "line 2"),
            ("caller,callee,count\nA,B,1\nA,B,0\n", "line 3"),
        ],
    )
    def test_errors(self, text, where):
        with pytest.raises(InputError) as info:
            ingest_invocation_log(text)
        assert info.value.location == where


class TestLoad:
    def test_format_from_suffix(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("caller,callee\nA,B\n")
        assert load_graph(path).weight("A", "B") == 1

    def test_unknown_suffix(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("")
        with pytest.raises(InputError, match="input-format"):
            load_graph(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot read"):
            load_graph(tmp_path / "nope.json")


class TestGraphInvariants:
    def test_unknown_endpoint(self):
        with pytest.raises(InputError, match="unknown element"):
            DependencyGraph([Element("A")], [("A", "B", 1)])

    def test_element_validation(self):
        with pytest.raises(InputError):
            Element("A ")
        with pytest.raises(InputError):
            Element("A", methods=("m", "m"))

    def test_order_independent_equality(self):
        a = DependencyGraph([Element("B"), Element("A")], [("B", "A", 1), ("A", "B", 2)])
        b = DependencyGraph([Element("A"), Element("B")], [("A", "B", 1), ("B", "A", 1), ("A", "B", 1)])
        assert a == b


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_weight_conservation_through_csv(rng):
    rows = [(rng.choice("ABCDE"), rng.choice("ABCDE"), rng.randint(1, 9)) for _ in range(rng.randint(0, 30))]
    text = "caller,callee,count\n" + "".join(f"{a},{b},{c}\n" for a, b, c in rows)
    g = ingest_invocation_log(text)
    assert g.total_weight() == sum(c for a, b, c in rows) - sum(c for a, b, c in rows if a == b)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_three_ingest_paths_agree(rng: random.Random):
    elements, edges = random_graph_data(rng, labels=False)
    mentioned = sorted({x for pair in edges for x in pair})
    elements = [{"id": i} for i in mentioned]
    g_json = parse_json_graph(_json_doc(elements, edges))
    csv_text = "caller,callee,count\n" + "".join(
        f'"{s.replace(chr(34), chr(34) * 2)}","{t.replace(chr(34), chr(34) * 2)}",{w}\n'
        for (s, t), w in edges.items()
    )
    g_csv = ingest_invocation_log(csv_text)
    dot_lines = [
        "digraph g {",
        *(
            '"{}" -> "{}" [weight={}];'.format(
                s.replace("\\", "\\\\").replace('"', '\\"'), t.replace("\\", "\\\\").replace('"', '\\"'), w
            )
            for (s, t), w in edges.items()
        ),
        "}",
    ]
    g_dot = parse_dot_graph("\n".join(dot_lines))
    assert g_json == g_csv == g_dot


class TestExecutionOrders:
    def test_single(self):
        assert enumerate_execution_orders(["m1"]) == ["m1()"]

    def test_two_methods(self):
        assert enumerate_execution_orders(["m1", "m2"]) == ["m1()", "m1(m2())", "m2()", "m2(m1())"]

    def test_three_methods(self):
        orders = enumerate_execution_orders(["a", "b", "c"])
        assert len(orders) == count_orders_bruteforce(3) == 15
        assert orders[:3] == ["a()", "a(b())", "a(b(c()))"]
        assert len(set(orders)) == 15

    @pytest.mark.parametrize("k", range(1, 7))
    def test_counts(self, k):
        methods = [f"m{i}" for i in range(1, k + 1)]
        assert len(enumerate_execution_orders(methods)) == count_orders_bruteforce(k) == count_orders_formula(k)

    @pytest.mark.parametrize("methods", [[], ["a", "a"]])
    def test_rejects(self, methods):
        with pytest.raises(InputError):
            enumerate_execution_orders(methods)
