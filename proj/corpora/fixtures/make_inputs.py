#!/usr/bin/env python3
"""Regenerates the binary inputs of every fixture."""
import pathlib
import struct

ROOT = pathlib.Path(__file__).resolve().parent


def i32(*values):
    return b"".join(struct.pack("<i", v) for v in values)


def u32(*values):
    return b"".join(struct.pack("<I", v) for v in values)


INPUTS = {
    "01_increment": {"benign_001": i32(1), "benign_150": i32(150), "benign_299": i32(299), "crafted_400": i32(400)},
    "02_arithmetic": {"benign_small": bytes([3, 1]), "benign_mid": bytes([40, 7]), "benign_edge": bytes([63, 3]),
                      "crafted_big": bytes([200, 9])},
    "03_return_chain": {"benign_010": i32(10), "benign_128": i32(128), "crafted_500": i32(500)},
    "04_out_param": {"benign_005": i32(5), "benign_064": i32(64), "crafted_300": i32(300)},
    "05_param": {"benign_001": i32(1), "benign_100": i32(100), "crafted_400": i32(400)},
    "06_struct_members": {"benign_020": i32(20), "benign_128": i32(128), "crafted_300": i32(300)},
    "07_function_pointers": {"benign_050": i32(50), "benign_200": i32(200), "crafted_900": i32(900)},
    "08_mutual_recursion": {"benign_008": i32(8), "benign_064": i32(64), "crafted_640": i32(640)},
    "09_wrapper_chain": {"benign_003": i32(3), "benign_050": i32(50), "crafted_333": i32(333)},
    "10_two_by_two": {"benign_pair": i32(10, 20), "benign_edge": i32(64, 64), "crafted_pair": i32(200, 300)},
    "11_derived_check": {"benign_000": i32(0), "benign_255": i32(255), "crafted_700": i32(700)},
    "12_non_aborting": {"benign_010": i32(10), "benign_064": i32(64)},
    "13_sanitization": {"benign_text": b"hello fixture\n", "benign_long": b"B" * 100},
    "14_adjacent_swap": {"benign_007": i32(7), "benign_128": i32(128), "crafted_512": i32(512)},
    "15_format_passthrough": {"benign_plain": b"plain text only", "benign_words": b"two words"},
    "16_gating": {"benign_000": i32(0), "benign_127": i32(127), "crafted_999": i32(999)},
    "17_one_source_two_sinks": {"benign_012": i32(12), "benign_064": i32(64), "crafted_256": i32(256)},
    "18_argv": {"benign_a": b"x", "benign_b": b"yy"},
    "19_unrelated_path": {"benign_000": i32(0), "benign_010": i32(10), "benign_100": i32(100), "crafted_300": i32(300)},
    "20_overflow_check": {"benign_pair": u32(10, 20), "benign_full": u32(0, 256), "benign_tail": u32(200, 56),
                          "crafted_wrap": u32(32, 0xFFFFFFF0)},
}

for fixture, files in INPUTS.items():
    out = ROOT / fixture / "inputs"
    out.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        (out / f"{name}.bin").write_bytes(data)
