"""CSV round trips and the line-numbered failure messages."""

import numpy as np
import pytest

from bincalib import (ComputerDataset, Domain, InputError, PhysicalDataset,
                      read_computer_csv, read_physical_csv, unit_domain,
                      write_computer_csv, write_physical_csv)


@pytest.fixture
def phys(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(12, 2))
    y = (rng.uniform(size=12) < 0.5).astype(float)
    if y.min() == y.max():
        y[0] = 1.0 - y[0]
    dom = Domain(np.array([[0.0, 1.0], [0.0, 1.0]]), names=("speed", "load"))
    return PhysicalDataset(x, y, dom), tmp_path / "phys.csv"


def test_physical_round_trip_is_lossless(phys):
    data, path = phys
    write_physical_csv(path, data)
    back = read_physical_csv(path, data.domain)
    assert np.array_equal(back.x, data.x)
    assert np.array_equal(back.y, data.y)
    assert back.domain.names == ("speed", "load")


def test_computer_round_trip_is_lossless(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(9, 1))
    th = rng.uniform(size=(9, 2))
    y = np.array([0, 1, 0, 1, 1, 0, 0, 1, 0], dtype=float)
    dom_x = Domain(np.array([[0.0, 1.0]]), names=("speed",))
    dom_t = Domain(np.array([[0.0, 1.0]] * 2), names=("gain", "offset"))
    data = ComputerDataset(x, th, y, dom_x, dom_t)
    path = tmp_path / "comp.csv"
    write_computer_csv(path, data)
    back = read_computer_csv(path, dom_x, dom_t)
    assert np.array_equal(back.x, data.x)
    assert np.array_equal(back.theta, data.theta)
    assert np.array_equal(back.y, data.y)


def test_header_mismatch_is_reported(phys):
    data, path = phys
    path.write_text("speed,weight,y\n0.1,0.2,1\n0.3,0.4,0\n")
    with pytest.raises(InputError, match="header"):
        read_physical_csv(path, data.domain)


def test_field_count_error_names_line(phys):
    data, path = phys
    path.write_text("speed,load,y\n0.1,0.2,1\n0.3,0.4\n")
    with pytest.raises(InputError, match="line 3"):
        read_physical_csv(path, data.domain)


def test_parse_error_names_line(phys):
    data, path = phys
    path.write_text("speed,load,y\n0.1,0.2,1\n0.3,oops,0\n0.5,0.6,1\n")
    with pytest.raises(InputError, match="line 3"):
        read_physical_csv(path, data.domain)


def test_label_error_names_line(phys):
    data, path = phys
    path.write_text("speed,load,y\n0.1,0.2,1\n0.3,0.4,2\n")
    with pytest.raises(InputError, match="line 3"):
        read_physical_csv(path, data.domain)


def test_domain_violations_list_lines(phys):
    data, path = phys
    path.write_text("speed,load,y\n0.1,0.2,1\n1.5,0.4,0\n0.5,-0.1,1\n")
    with pytest.raises(InputError, match="line") as err:
        read_physical_csv(path, data.domain)
    msg = str(err.value)
    assert "3" in msg and "4" in msg


def test_blank_lines_are_skipped(phys):
    data, path = phys
    path.write_text("speed,load,y\n0.1,0.2,1\n\n0.3,0.4,0\n\n0.5,0.6,1\n")
    back = read_physical_csv(path, data.domain)
    assert back.n == 3


def test_empty_and_headerless_files_rejected(phys, tmp_path):
    data, path = phys
    path.write_text("")
    with pytest.raises(InputError, match="empty"):
        read_physical_csv(path, data.domain)
    lonely = tmp_path / "header_only.csv"
    lonely.write_text("speed,load,y\n")
    with pytest.raises(InputError):
        read_physical_csv(lonely, data.domain)


def test_computer_header_order_is_controls_then_parameters(tmp_path):
    path = tmp_path / "c.csv"
    dom_x = Domain(np.array([[0.0, 1.0]]), names=("speed",))
    dom_t = Domain(np.array([[0.0, 1.0]]), names=("gain",))
    path.write_text("gain,speed,y\n0.1,0.2,1\n0.3,0.4,0\n")
    with pytest.raises(InputError, match="header"):
        read_computer_csv(path, dom_x, dom_t)
    path.write_text("speed,gain,y\n0.1,0.2,1\n0.3,0.4,0\n")
    back = read_computer_csv(path, dom_x, dom_t)
    assert back.n == 2


def test_written_floats_survive_seventeen_digits(tmp_path):
    x = np.array([[1.0 / 3.0], [np.pi / 4.0], [2.0 / 7.0]])
    y = np.array([0.0, 1.0, 0.0])
    data = PhysicalDataset(x, y, unit_domain(1, names=("speed",)))
    path = tmp_path / "precise.csv"
    write_physical_csv(path, data)
    back = read_physical_csv(path, data.domain)
    assert np.array_equal(back.x, x)
