import pytest

from nledlab.config import dump_config, load_config, parse_config, section


def test_parse_comments_and_case():
    cfg = parse_config("""
# a comment
Model.Kind = bi   # trailing comment
model.kappa=1.5

background.bx = 1
""")
    assert cfg == {"model.kind": "bi", "model.kappa": "1.5", "background.bx": "1"}


@pytest.mark.parametrize("bad", ["model.kind bi", " = 3"])
def test_parse_errors_name_line(bad):
    with pytest.raises(ValueError, match="line 1"):
        parse_config(bad)


def test_section_strips_prefix():
    cfg = {"model.kind": "bi", "model.kappa": "1", "grid.n": "64"}
    assert section(cfg, "model") == {"kind": "bi", "kappa": "1"}
    assert section(cfg, "output") == {}


def test_dump_round_trip(tmp_path):
    cfg = {"b.x": "2", "a.y": "1"}
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg
    assert dump_config(cfg).splitlines()[0] == "a.y = 1"
