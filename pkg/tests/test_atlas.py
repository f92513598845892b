import pytest

from emotionatlas.atlas import (
    Atlas,
    AtlasError,
    BrainRegion,
    load_atlas,
    load_bundled,
    normalize_region_name,
    save_atlas,
    system_of,
)

ATLAS18 = load_bundled("atlas18")
ATLAS25 = load_bundled("atlas25")

# Region names as the result tables print them.
HEALTHY_DEPRESSED_TABLE_NAMES = [
    "Amygdala Left", "Amygdala Right", "Anterior Cingulate Right",
    "Insula Left", "Insula Right", "Orbitofrontal Left", "Hippocampus Left",
    "Temporal Pole Left", "Temporal Pole Right", "Superior Temporal Left",
    "Superior Temporal Right", "Caudate Right", "Putamen Left",
    "Putamen Right", "Nucleus Accumbens Left", "Raphe Nuclei",
    "Posterior Cingulate",
]
HUMAN_BOT_TABLE_NAMES = [
    "Amygdala Left", "Amygdala Right", "Anterior Cingulate Left",
    "Anterior Cingulate Right", "Insula Left", "Insula Right",
    "Orbitofrontal Left", "Orbitofrontal Right", "Hippocampus Left",
    "Hippocampus Right", "Prefrontal Cortex Left", "Prefrontal Cortex Right",
    "Temporal Pole Left", "Temporal Pole Right", "Superior Temporal Left",
    "Superior Temporal Right", "Caudate Left", "Caudate Right",
    "Putamen Left", "Putamen Right", "Nucleus Accumbens Left",
    "Nucleus Accumbens Right", "Hypothalamus", "Periaqueductal Gray",
    "Ventral Tegmental Area",
]


def test_atlas18_region_count_and_split():
    assert len(ATLAS18) == 18
    lateral = [r for r in ATLAS18.regions if r.hemisphere in ("left", "right")]
    midline = [r for r in ATLAS18.regions if r.hemisphere == "midline"]
    assert len(lateral) == 11
    assert len(midline) == 7


def test_atlas25_region_count():
    assert len(ATLAS25) == 25


def test_atlas25_published_coordinates():
    assert ATLAS25.get("amygdala_left").mni == (-20.0, -5.0, -18.0)
    assert ATLAS25.get("insula_right").mni == (40.0, 8.0, 0.0)


def test_atlas18_shares_published_coordinates():
    assert ATLAS18.get("amygdala_left").mni == (-20.0, -5.0, -18.0)
    assert ATLAS18.get("insula_right").mni == (40.0, 8.0, 0.0)


def test_system_of_examples():
    assert system_of("amygdala_left", ATLAS25) == "limbic"
    assert system_of("prefrontal_cortex_left", ATLAS25) == "cortical"
    assert system_of("raphe_nuclei", ATLAS18) == "brainstem"
    with pytest.raises(AtlasError, match="cerebellum"):
        system_of("cerebellum", ATLAS25)


def test_all_table_names_resolve_in_shipped_atlases():
    # Human/bot table names all live in the 25-region atlas; the
    # healthy/depressed table adds two midline regions found in atlas18.
    names25 = set(ATLAS25.names())
    names18 = set(ATLAS18.names())
    for printed in HUMAN_BOT_TABLE_NAMES:
        assert normalize_region_name(printed) in names25
    for printed in HEALTHY_DEPRESSED_TABLE_NAMES:
        assert normalize_region_name(printed) in names25 | names18


def test_normalize_region_name():
    assert normalize_region_name("Insula Left") == "insula_left"
    assert normalize_region_name("  Raphe Nuclei ") == "raphe_nuclei"


def test_round_trip(tmp_path):
    path = tmp_path / "a.csv"
    save_atlas(ATLAS25, path)
    again = load_atlas(path, name=ATLAS25.name)
    assert again == ATLAS25
    assert path.read_text() == save_and_read(again, tmp_path / "b.csv")


def save_and_read(atlas, path):
    save_atlas(atlas, path)
    return path.read_text()


def test_duplicate_region_rejected(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text(
        "name,x,y,z,hemisphere,system,provenance\n"
        "insula_left,-40,8,0,left,limbic,\n"
        "insula_left,-40,8,0,left,limbic,\n"
    )
    with pytest.raises(AtlasError, match="duplicate"):
        load_atlas(path)


def test_malformed_coordinate_rejected(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text(
        "name,x,y,z,hemisphere,system,provenance\nfoo,abc,0,0,left,limbic,\n"
    )
    with pytest.raises(AtlasError, match="coordinate"):
        load_atlas(path)


def test_out_of_range_coordinate_rejected(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text(
        "name,x,y,z,hemisphere,system,provenance\nfoo,-250,0,0,left,limbic,\n"
    )
    with pytest.raises(AtlasError, match="250"):
        load_atlas(path)


def test_unknown_hemisphere_and_system_rejected():
    with pytest.raises(AtlasError):
        BrainRegion(name="x", mni=(0, 0, 0), hemisphere="top", system="limbic")
    with pytest.raises(AtlasError):
        BrainRegion(name="x", mni=(0, 0, 0), hemisphere="left", system="mystery")


def test_empty_atlas_rejected():
    with pytest.raises(AtlasError):
        Atlas(name="empty", regions=())


def test_unknown_bundled_name():
    with pytest.raises(AtlasError, match="atlas99"):
        load_bundled("atlas99")


def test_region_order_stable():
    assert ATLAS25.names()[0] == "amygdala_left"
    assert ATLAS25.index_of("insula_right") == 5
