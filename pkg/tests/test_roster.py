import logging

import pytest

from subs2net.errors import EmptyCorpus, MissingColumn
from subs2net.roster import (
    ActorRecord, Blacklist, MovieRecord, RosterEntry, build_blacklist, filter_roster,
    load_gender_table, load_name_set, load_roster, normalize_name, reconcile_name,
    reconcile_rosters, resolve_gender, roster_for_movie,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_normalize_name():
    assert normalize_name("  O'Brien-Smith,  JR. ") == "o'brien-smith jr"
    assert normalize_name("Thug #1") == "thug 1"


def test_load_roster_category_and_gender_table(tmp_path):
    cast = write(tmp_path, "cast.tsv",
                 "tconst\tcharacters\tprimaryName\tcategory\tordering\n"
                 "m1\t[\"Neo\"]\tKeanu Reeves\tactor\t1\n"
                 "m1\t[\"Trinity\"]\tCarrie-Anne Moss\tactress\t2\n"
                 "m1\tOracle\tGloria Foster\t\t3\n"
                 "m1\tAgent\tZzz Unknown\t\t4\n"
                 "m1\tDirector\tLana W\tdirector\t5\n"
                 "m1\tNeo\tKeanu Reeves\tactor\t1\n")
    genders = write(tmp_path, "names.csv", "name,gender,probability\ngloria,F,0.99\nzzz,M,0.6\n")
    entries = load_roster(cast, genders)
    assert [(e.character_name, e.gender, e.cast_order) for e in entries] == [
        ("Neo", "male", 1), ("Trinity", "female", 2), ("Oracle", "female", 3), ("Agent", "unknown", 4),
    ]


def test_duplicate_warns(tmp_path, caplog):
    cast = write(tmp_path, "c.csv", "movie_id,character,actor,ordering\nm,A,X,1\nm,A,X,2\n")
    with caplog.at_level(logging.WARNING):
        entries = load_roster(cast)
    assert len(entries) == 1 and entries[0].cast_order == 1
    assert "duplicate" in caplog.text


def test_missing_column(tmp_path):
    with pytest.raises(MissingColumn):
        load_roster(write(tmp_path, "c.csv", "movie_id,character,ordering\nm,A,1\n"))
    with pytest.raises(MissingColumn):
        load_gender_table(write(tmp_path, "g.csv", "name,gender\nann,F\n"))


def test_resolve_gender():
    table = {"mary": ("female", 0.99), "alex": ("male", 0.55)}
    assert resolve_gender("actress", "Bob", table) == "female"
    assert resolve_gender("", "Mary Poppins", table) == "female"
    assert resolve_gender("", "Alex Smith", table) == "unknown"
    assert resolve_gender("", "Quentin", table) == "unknown"


def test_record_invariants():
    with pytest.raises(ValueError):
        RosterEntry("m", "  ", "actor")
    with pytest.raises(ValueError):
        RosterEntry("m", "a", "b", cast_order=0)
    with pytest.raises(ValueError):
        MovieRecord("m", votes=-1)
    with pytest.raises(ValueError):
        MovieRecord("m", release_year=1700)
    with pytest.raises(ValueError):
        ActorRecord("x", 1950, 1940)
    assert ActorRecord("x", 1950).age_at(1990) == 40


def test_reconcile_name():
    assert reconcile_name("Don Corleone", "Don Vito Corleone") == "Don Vito Corleone"
    assert reconcile_name("Neo", "Neo") == "Neo"
    assert reconcile_name("A", "") == "A"
    assert reconcile_name("Abc", "Xyz") == "Abc"


def test_reconcile_rosters():
    a = [RosterEntry("m", "Don Corleone", "Marlon Brando", "male", 1)]
    b = [RosterEntry("m", "Don Vito Corleone", "Marlon Brando", "male", 1)]
    assert reconcile_rosters(a, b)[0].character_name == "Don Vito Corleone"


def _corpus():
    rows = []
    for i in range(40):
        rows.append(RosterEntry(f"m{i}", "Nurse", f"Actor {i}", cast_order=12))
        rows.append(RosterEntry(f"m{i}", "Bruce", f"Lead {i}", cast_order=15))
    rows.append(RosterEntry("m0", "Zorgon the Eternal", "Q", cast_order=9))
    # recurring franchise role, same actor in several films
    rows += [RosterEntry(f"m{i}", "Henchman Bot", "Same Guy", cast_order=8) for i in range(3)]
    # generic but usually billed near the top
    rows += [RosterEntry(f"m{i}", "Narrator", f"N{i}", cast_order=2) for i in range(5)]
    rows += [RosterEntry("m1", "Thug #1", "T1", cast_order=20), RosterEntry("m2", "Thug #1", "T2", cast_order=21)]
    return rows


def test_build_blacklist_steps():
    bl = build_blacklist(_corpus(), {"bruce"}, {"wayne"})
    assert bl.names == {"nurse", "thug 1"}
    assert "Nurse" in bl and "Bruce" not in bl and "Zorgon the Eternal" not in bl
    assert bl == build_blacklist(_corpus(), {"bruce"}, {"wayne"})
    assert bl.to_text() == "nurse\nthug 1\n"
    with pytest.raises(EmptyCorpus):
        build_blacklist([], set(), set())


def test_build_blacklist_order_boundary_inclusive():
    rows = [RosterEntry("a", "Guard", "x", cast_order=3), RosterEntry("b", "Guard", "y", cast_order=3)]
    assert len(build_blacklist(rows, set(), set())) == 0
    rows = [RosterEntry("a", "Guard", "x", cast_order=3), RosterEntry("b", "Guard", "y", cast_order=4)]
    assert build_blacklist(rows, set(), set()).names == {"guard"}


def test_blacklist_never_contains_known_tokens():
    given, sur = {"bruce", "thug"}, {"nurse"}
    bl = build_blacklist(_corpus(), given, sur)
    for name in bl.names:
        assert not set(name.split()) & (given | sur)


def test_filter_roster():
    roster = [RosterEntry("m", "Thug #1", "a"), RosterEntry("m", "Neo", "b")]
    bl = Blacklist.from_names(["Thug #1"])
    out = filter_roster(roster, bl)
    assert [e.character_name for e in out] == ["Neo"]
    assert filter_roster(out, bl) == out
    assert filter_roster(roster, Blacklist()) == roster
    assert filter_roster(roster, Blacklist.from_names(["thug 1", "neo"])) == []


def test_blacklist_file_and_name_set(tmp_path):
    bl = Blacklist.load(write(tmp_path, "b.txt", "Nurse\n\n  GUARD \n"))
    assert bl.names == {"nurse", "guard"}
    assert load_name_set(write(tmp_path, "n.txt", "Mary,F,7065\nJohn\n")) == {"mary", "john"}


def test_roster_for_movie_golden(golden_dir):
    entries = load_roster(golden_dir / "cast.csv")
    g01 = roster_for_movie(entries, "g01")
    assert [e.character_name for e in g01] == ["Alice Smith", "Bob Jones", "Carol White"]
    assert [e.gender for e in g01] == ["female", "male", "female"]
