import math
import socket
import threading
import time

import pytest

from bevnav.nav import Agent
from bevnav.navlang import (
    Assign,
    AttrTriple,
    Call,
    NavProgram,
    NavRuntimeError,
    NavSyntaxError,
    Repeat,
    SideRef,
    VarRef,
    build_prompt,
    extract_attributes,
    external_translate,
    fallback_program,
    interpret,
    parse_program,
    pretty_print,
)

SNIPPET_FACE = 'obj = attrs("table", 3, "yellow")\nface(obj)\n'
SNIPPET_RIGHT = 'obj = attrs("sofa", 0, "red")\nmove_to_right(obj)\n'
SNIPPET_ORBIT = """\
move_forward(1)
obj = attrs("sofa", 0, "red")
get_specified_obj_pos(obj)
face(obj)
turn(-90)
repeat 8 {
    move_forward(side)
    turn(90)
}
"""


class TestParser:
    def test_face_snippet_ast(self):
        program = parse_program(SNIPPET_FACE)
        assert program == NavProgram((
            Assign("obj", AttrTriple("table", 3, "yellow")),
            Call("face", (VarRef("obj"),)),
        ))

    def test_right_side_snippet_ast(self):
        program = parse_program(SNIPPET_RIGHT)
        assert program == NavProgram((
            Assign("obj", AttrTriple("sofa", 0, "red")),
            Call("move_to_right", (VarRef("obj"),)),
        ))

    def test_orbit_snippet_ast(self):
        program = parse_program(SNIPPET_ORBIT)
        assert program == NavProgram((
            Call("move_forward", (1,)),
            Assign("obj", AttrTriple("sofa", 0, "red")),
            Call("get_specified_obj_pos", (VarRef("obj"),)),
            Call("face", (VarRef("obj"),)),
            Call("turn", (-90,)),
            Repeat(8, (
                Call("move_forward", (SideRef(),)),
                Call("turn", (90,)),
            )),
        ))

    def test_comments_and_none_color(self):
        program = parse_program('# go\nobj = attrs("chair", 0, none)  # nearest\nstop()\n')
        assert program.statements[0].value == AttrTriple("chair", 0, None)

    def test_string_none_color_means_unspecified(self):
        program = parse_program('obj = attrs("chair", 1, "none")')
        assert program.statements[0].value.color is None

    def test_unknown_function(self):
        with pytest.raises(NavSyntaxError, match="unknown function 'fly'") as err:
            parse_program("fly(1)")
        assert (err.value.line, err.value.col) == (1, 1)

    def test_wrong_arity(self):
        with pytest.raises(NavSyntaxError, match="takes 1 argument"):
            parse_program("turn(1, 2)")

    def test_unterminated_repeat(self):
        with pytest.raises(NavSyntaxError, match="unterminated repeat"):
            parse_program("repeat 2 {\nstop()\n")

    def test_bad_repeat_count(self):
        with pytest.raises(NavSyntaxError, match="positive integer"):
            parse_program("repeat 0 { stop() }")

    def test_empty_repeat_body(self):
        with pytest.raises(NavSyntaxError, match="must not be empty"):
            parse_program("repeat 2 { }")

    def test_assignment_requires_attrs(self):
        with pytest.raises(NavSyntaxError, match="attrs"):
            parse_program("x = 5")

    def test_keyword_cannot_be_a_variable(self):
        with pytest.raises(NavSyntaxError, match="cannot be used as a variable"):
            parse_program('side = attrs("table", 0, none)')

    def test_unexpected_character_reports_position(self):
        with pytest.raises(NavSyntaxError) as err:
            parse_program("stop()\nturn(@)")
        assert err.value.line == 2

    def test_attrs_validation(self):
        with pytest.raises(NavSyntaxError, match="name must be a string"):
            parse_program("obj = attrs(7, 0, none)")
        with pytest.raises(NavSyntaxError, match="non-negative integer"):
            parse_program('obj = attrs("a", -1, none)')
        with pytest.raises(NavSyntaxError, match="string or none"):
            parse_program('obj = attrs("a", 1, 3)')


class TestPrettyPrint:
    @pytest.mark.parametrize("text", [SNIPPET_FACE, SNIPPET_RIGHT, SNIPPET_ORBIT])
    def test_round_trip(self, text):
        program = parse_program(text)
        assert parse_program(pretty_print(program)) == program

    def test_argument_formatting(self):
        text = 'move_forward(1.5)\nmove_to(3, 4)\nobj = attrs("table", 2, none)\nstop()'
        program = parse_program(text)
        printed = pretty_print(program)
        assert "move_forward(1.5)" in printed
        assert 'attrs("table", 2, none)' in printed
        assert parse_program(printed) == program


class TestInterpreter:
    def test_face_snippet_executes(self, orbit_map):
        imap, occ = orbit_map
        agent = Agent(imap, occ, (70, 30))
        interpret(parse_program(SNIPPET_FACE), agent)
        # Third yellow table left-to-right sits northeast: rows 10-15,
        # cols 44-51, centroid (12.5, 47.5).
        from bevnav.nav import bearing_deg

        assert agent.state.heading_deg == pytest.approx(
            bearing_deg((70, 30), (12.5, 47.5))
        )

    def test_right_side_snippet_executes(self, orbit_map):
        imap, occ = orbit_map
        agent = Agent(imap, occ, (80, 60))
        interpret(parse_program(SNIPPET_RIGHT), agent)
        assert agent.state.cell[1] > 69  # east of the sofa = its right side

    def test_orbit_snippet_closes_the_loop(self, orbit_map):
        imap, occ = orbit_map
        agent = Agent(imap, occ, (80, 60), heading_deg=0.0)
        interpret(parse_program(SNIPPET_ORBIT), agent)
        # After move_forward(1) the orbit anchor is (70, 60); two full
        # circuits of the contour sides must return there.
        anchor = (70, 60)
        r, c = agent.state.cell
        assert math.hypot(r - anchor[0], c - anchor[1]) <= 3.0
        turns = [s for s in agent.trajectory.steps if s.event == "turn"]
        assert len(turns) >= 9  # face + turn(-90) + 8 orbit turns

    def test_undefined_variable_reports_span(self, orbit_map):
        imap, occ = orbit_map
        agent = Agent(imap, occ, (70, 30))
        with pytest.raises(NavRuntimeError, match="undefined variable") as err:
            interpret(parse_program("stop()\nface(ghost)"), agent)
        assert err.value.line == 2

    def test_missing_instance_becomes_runtime_error(self, orbit_map):
        imap, occ = orbit_map
        agent = Agent(imap, occ, (70, 30))
        with pytest.raises(NavRuntimeError, match="no instance found"):
            interpret(parse_program('obj = attrs("piano", 0, none)'), agent)

    def test_side_without_contour_fails(self, orbit_map):
        imap, occ = orbit_map
        agent = Agent(imap, occ, (70, 30))
        with pytest.raises(NavRuntimeError, match="no active contour"):
            interpret(parse_program("move_forward(side)"), agent)


CATEGORIES = ["floor", "table", "chair", "sofa", "kitchen", "toilet"]
COLORS = ["none", "yellow", "black", "red"]


class TestExtractAttributes:
    def extract(self, command):
        result = extract_attributes(command, CATEGORIES, COLORS)
        return [(a.name, a.instance_idx, a.color) for a in result.attrs]

    def test_ordinal_color_category(self):
        assert self.extract("navigate to the third yellow table.") == [("table", 3, "yellow")]

    def test_nearest_and_chained_goals(self):
        assert self.extract("go to the nearest yellow chair and then go to the black sofa.") == [
            ("chair", 0, "yellow"),
            ("sofa", 0, "black"),
        ]

    def test_plain_room_goals(self):
        assert self.extract("go to the kitchen and then go to the toilet.") == [
            ("kitchen", 0, None),
            ("toilet", 0, None),
        ]

    def test_long_mixed_command(self):
        command = (
            "Move to the west of the black chair, with the first red sofa on "
            "your right, move to the 2nd table, then turn right 90 degree, "
            "then find a table."
        )
        assert self.extract(command) == [
            ("chair", 0, "black"),
            ("sofa", 1, "red"),
            ("table", 2, None),
            ("table", 0, None),
        ]

    def test_dangling_modifiers_warn(self):
        result = extract_attributes("go to the second red", CATEGORIES, COLORS)
        assert result.attrs == []
        assert len(result.warnings) == 2


class TestFallbackProgram:
    def test_visits_each_landmark_and_stops(self):
        result = extract_attributes("go to the table then the red sofa", CATEGORIES, COLORS)
        program = fallback_program(result.attrs)
        calls = [s.name for s in program.statements if isinstance(s, Call)]
        assert calls == ["move_to_object", "stop", "move_to_object", "stop"]
        assert program.statements[3].value == AttrTriple("sofa", 0, "red")


def serve_once(response_bytes, delay_s=0.0):
    """One-shot TCP server; returns (port, thread)."""
    srv = socket.socket()
    srv.bind(("127.0.0.1", 0))
    srv.listen(1)
    port = srv.getsockname()[1]

    def run():
        conn, _ = srv.accept()
        conn.settimeout(5.0)
        buf = b""
        while b"\n\n" not in buf:
            data = conn.recv(4096)
            if not data:
                break
            buf += data
        if delay_s:
            time.sleep(delay_s)
        conn.sendall(response_bytes)
        conn.close()
        srv.close()

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    return port, thread


class TestExternalTranslate:
    def test_prompt_has_no_blank_lines(self):
        prompt = build_prompt(CATEGORIES, COLORS)
        assert all(line.strip() for line in prompt.splitlines())

    def test_uses_the_translated_program(self):
        port, thread = serve_once(b'obj = attrs("sofa", 0, "red")\nface(obj)\n\n')
        program = external_translate(
            "please face the red sofa", "127.0.0.1", port, CATEGORIES, COLORS
        )
        thread.join(timeout=5)
        assert program == NavProgram((
            Assign("obj", AttrTriple("sofa", 0, "red")),
            Call("face", (VarRef("obj"),)),
        ))

    def test_malformed_response_falls_back(self):
        port, thread = serve_once(b"blorp???\n\n")
        program = external_translate(
            "go to the black chair", "127.0.0.1", port, CATEGORIES, COLORS
        )
        thread.join(timeout=5)
        assert program == fallback_program(
            extract_attributes("go to the black chair", CATEGORIES, COLORS).attrs
        )

    def test_connection_refused_falls_back(self):
        # Bind-then-close to get a port that nothing is listening on.
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        program = external_translate(
            "go to the third yellow table", "127.0.0.1", port, CATEGORIES, COLORS,
            timeout_s=1.0,
        )
        assert isinstance(program, NavProgram)
        assert program.statements[0].value == AttrTriple("table", 3, "yellow")

    def test_timeout_falls_back(self):
        port, _ = serve_once(b"stop()\n\n", delay_s=2.0)
        program = external_translate(
            "go to the kitchen", "127.0.0.1", port, CATEGORIES, COLORS, timeout_s=0.3
        )
        assert program.statements[0].value == AttrTriple("kitchen", 0, None)
