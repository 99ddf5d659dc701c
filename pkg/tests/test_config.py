import pytest

from wavemorph import config as cf


def test_defaults_validate():
    c = cf.RunConfig().validate()
    assert c.wavelet == "haar"
    assert c.resize == 256
    assert c.entropy_levels == 256
    assert c.dist_bins == 32
    assert c.kl_epsilon == 1e-10
    assert c.seed == 0
    assert c.workers == 1


@pytest.mark.parametrize(
    "kwargs",
    [
        {"wavelet": "sym9"},
        {"resize": 4},
        {"resize": -1},
        {"entropy_levels": 1},
        {"dist_bins": 0},
        {"kl_epsilon": 0.0},
        {"seed": -1},
        {"workers": 0},
    ],
)
def test_validate_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        cf.RunConfig(**kwargs).validate()


def test_resize_zero_means_off():
    assert cf.RunConfig(resize=0).validate().resize == 0


def test_config_file_roundtrip(tmp_path):
    c = cf.RunConfig(wavelet="db2", resize=128, entropy_levels=64, dist_bins=16, kl_epsilon=1e-8, seed=42)
    path = tmp_path / "run.cfg"
    cf.write_config_file(path, c)
    values = cf.load_config_file(path)
    assert cf.RunConfig(**values).validate() == c


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "\n"
        "wavelet = db4\n"
        "resize=0   # trailing comment\n"
        "kl_epsilon = 1e-9\n"
    )
    values = cf.load_config_file(path)
    assert values == {"wavelet": "db4", "resize": 0, "kl_epsilon": 1e-9}


def test_config_file_rejects_unknown_keys_and_bad_lines(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("verbosity = 3\n")
    with pytest.raises(ValueError, match="unknown config key"):
        cf.load_config_file(path)
    path.write_text("just a dangling token\n")
    with pytest.raises(ValueError):
        cf.load_config_file(path)
    path.write_text("resize = lots\n")
    with pytest.raises(ValueError):
        cf.load_config_file(path)


def test_describe_mentions_every_key():
    text = cf.RunConfig().describe()
    for key in (*cf.CONFIG_KEYS, "workers"):
        assert key + "=" in text
