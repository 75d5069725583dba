import numpy as np
import pytest

from handscribe import project as project_mod
from handscribe.errors import (
    IoFailure,
    MissingTextError,
    ParseError,
    PhaseOrderError,
    UnknownIdError,
    UnsupportedVersionError,
    ValidationError,
    ZeroAreaError,
)
from handscribe.order import BoxRecord
from handscribe.preproc import GrayImage, load_image
from handscribe.project import PageInfo, Project


def sample_project(status="recognized"):
    boxes = [
        BoxRecord(id="b1", x=10, y=10, w=30, h=12, score=0.9, text="the"),
        BoxRecord(id="b2", x=50, y=11, w=30, h=12, score=0.8, text="cat"),
        BoxRecord(id="b3", x=10, y=40, w=30, h=12, score=0.7, text="sat"),
    ]
    return Project(
        page=PageInfo(source="page.png", width=200, height=100, scale=1.0),
        boxes=boxes, order=["b1", "b2", "b3"], status=status,
    )


def random_project(rng):
    n = int(rng.integers(0, 8))
    boxes = []
    for k in range(n):
        boxes.append(BoxRecord(
            id=f"b{k + 1}",
            x=int(rng.integers(0, 150)), y=int(rng.integers(0, 80)),
            w=int(rng.integers(1, 50)), h=int(rng.integers(1, 20)),
            angle=float(rng.uniform(-0.5, 0.5)),
            score=float(rng.uniform(0, 1)) if rng.random() < 0.7 else None,
            text="word%d" % k if rng.random() < 0.5 else None,
            text_edited=bool(rng.random() < 0.2),
        ))
    order = [b.id for b in boxes] if (n and rng.random() < 0.7) else []
    status = "serialized" if order else "edited"
    return Project(
        page=PageInfo(source="x.png", width=200, height=100,
                      scale=float(rng.uniform(0.2, 2.0))),
        boxes=boxes, order=order, status=status,
    )


class TestSaveLoad:
    def test_round_trip_equality(self, tmp_path):
        proj = sample_project()
        path = tmp_path / "p.json"
        project_mod.save(proj, path)
        again = project_mod.load(path)
        assert again == proj

    def test_canonical_bytes(self, tmp_path):
        proj = sample_project()
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        project_mod.save(proj, a)
        project_mod.save(proj, b)
        assert a.read_bytes() == b.read_bytes()

    def test_random_projects_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        for k in range(100):
            proj = random_project(rng)
            path = tmp_path / f"r{k}.json"
            project_mod.save(proj, path)
            again = project_mod.load(path)
            assert again == proj
            project_mod.save(again, tmp_path / "again.json")
            assert (tmp_path / "again.json").read_bytes() == path.read_bytes()

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(IoFailure):
            project_mod.save(sample_project(), tmp_path / "no" / "dir" / "p.json")

    def test_parse_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            project_mod.load(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "v99.json"
        path.write_text('{"version": 99, "page": {}, "boxes": [], "order": [], "status": "detected"}')
        with pytest.raises(UnsupportedVersionError):
            project_mod.load(path)

    def test_order_references_missing_box(self):
        with pytest.raises(ValidationError):
            Project(
                page=PageInfo(source="x", width=10, height=10),
                boxes=[BoxRecord(id="b1", x=0, y=0, w=5, h=5)],
                order=["b1", "ghost"], status="serialized",
            )

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            Project(
                page=PageInfo(source="x", width=10, height=10),
                boxes=[BoxRecord(id="b1", x=0, y=0, w=5, h=5),
                       BoxRecord(id="b1", x=1, y=1, w=5, h=5)],
            )


class TestEdits:
    def test_add_box_resets_order(self):
        proj = sample_project()
        box = proj.add_box(5, 5, 20, 10)
        assert box.id == "b4"
        assert proj.order == []
        assert proj.status == "edited"
        assert box.score is None and box.text is None

    def test_add_box_clamps_to_page(self):
        proj = sample_project()
        box = proj.add_box(190, 90, 40, 40)
        assert (box.x, box.y, box.w, box.h) == (190, 90, 10, 10)

    def test_add_box_zero_area(self):
        proj = sample_project()
        with pytest.raises(ZeroAreaError):
            proj.add_box(10, 10, 0, 0)

    def test_delete_middle_relinks(self):
        proj = sample_project()
        proj.delete_box("b2")
        assert proj.order == ["b1", "b3"]
        assert proj.layout().neighbors["b1"] == (None, "b3")
        assert proj.status == "serialized"

    def test_delete_unknown(self):
        with pytest.raises(UnknownIdError):
            sample_project().delete_box("nope")

    def test_delete_only_box_empties_layout(self):
        proj = Project(
            page=PageInfo(source="x", width=50, height=50),
            boxes=[BoxRecord(id="b1", x=1, y=1, w=5, h=5, text="w")],
            order=["b1"], status="serialized",
        )
        proj.delete_box("b1")
        assert proj.boxes == []
        assert proj.order == []
        assert proj.layout().neighbors == {}

    def test_update_marks_text_stale(self):
        proj = sample_project()
        proj.update_box("b1", 11, 10, 30, 12)
        assert proj.box("b1").text is None
        assert proj.order[0] == "b1"
        assert proj.status == "serialized"

    def test_update_keeps_human_text(self):
        proj = sample_project()
        proj.set_text("b1", "The", edited=True)
        proj.update_box("b1", 12, 10, 30, 12)
        assert proj.box("b1").text == "The"

    def test_swap_requires_known_ids(self):
        proj = sample_project()
        proj.swap_order("b1", "b3")
        assert proj.order == ["b3", "b2", "b1"]
        with pytest.raises(UnknownIdError):
            proj.swap_order("b1", "zz")

    def test_serialize_sets_status(self):
        proj = sample_project(status="edited")
        proj.order = []
        layout = proj.serialize()
        assert layout.sequence == ["b1", "b2", "b3"]
        assert proj.status == "serialized"


class TestExports:
    def test_transcript_lines(self, tmp_path):
        proj = sample_project()
        paths = project_mod.export_transcript(proj, tmp_path)
        text = open(paths["transcript"], encoding="utf-8").read()
        assert text == "the cat\nsat\n"
        rows = open(paths["annotations"], encoding="utf-8").read().splitlines()
        assert rows[0] == "0\tb1\t10\t10\t30\t12\tthe"
        assert rows[2] == "2\tb3\t10\t40\t30\t12\tsat"

    def test_missing_text_lists_ids(self, tmp_path):
        proj = sample_project()
        proj.box("b2").text = None
        with pytest.raises(MissingTextError) as err:
            project_mod.export_transcript(proj, tmp_path)
        assert err.value.box_ids == ["b2"]

    def test_transcript_requires_recognized(self, tmp_path):
        with pytest.raises(PhaseOrderError):
            project_mod.export_transcript(sample_project(status="serialized"), tmp_path)

    def test_dataset_export(self, tmp_path):
        proj = sample_project()
        rng = np.random.default_rng(0)
        page = GrayImage(rng.integers(0, 256, (100, 200)).astype(np.uint8))
        proj.status = "finalized"
        manifest = project_mod.export_dataset(proj, tmp_path, page=page)
        rows = open(manifest, encoding="utf-8").read().splitlines()
        assert len(rows) == 3
        assert rows[0].split("\t") == ["word_0.png", "10", "10", "30", "12", "the"]
        crop = load_image(tmp_path / "word_0.png")
        assert (crop.width, crop.height) == (30, 12)
        np.testing.assert_array_equal(crop.pixels, page.pixels[10:22, 10:40])

    def test_finalize_idempotent(self, tmp_path):
        proj = sample_project()
        page = GrayImage(np.full((100, 200), 230, np.uint8))
        out = tmp_path / "export"
        first = project_mod.finalize(proj, out, page=page)
        blob1 = open(first["transcript"], "rb").read()
        second = project_mod.finalize(proj, out, page=page)
        blob2 = open(second["transcript"], "rb").read()
        assert proj.status == "finalized"
        assert blob1 == blob2
