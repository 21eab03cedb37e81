# Copyright 2026 The Semfield Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the binary fixtures with Python's struct module.

The *_le files are the reference little-endian encodings; the *_be files
hold the same content with every multi-byte field byte-swapped, as a
big-endian host writing natively would produce.
"""

import struct


def sfd(e):
    b = b"SFD1" + struct.pack(e + "IIIIIQ", 1, 2, 1, 3, 2, 2)
    b += struct.pack(e + "6f", -1.5, 0.0, 0.25, 2.0, 1.0, 3.5)
    for s in [b"a", b"bc"]:
        b += struct.pack(e + "I", len(s)) + s
    b += struct.pack(e + "6f", 1, 0, 0, 0, 0.6, 0.8) + struct.pack(e + "2f", 0.5, -0.5)
    b += struct.pack(e + "3fIfIf", 0.125, 0.5, 1.0, 1, 0.75, 0, 1.25)
    b += struct.pack(e + "3fIfIf", -1.0, 0.875, 3.0, 0, 1.0, 0, 2.5)
    return b


def sfq(e):
    b = b"SFQ1" + struct.pack(e + "IB7x", 3, 0) + struct.pack(e + "3f", 0.6, 0.0, 0.8)
    b += b"SFQ1" + struct.pack(e + "IB7x", 2, 1) + struct.pack(e + "2f", 1.0, 0.0)
    return b


if __name__ == "__main__":
    for name, fn in [("tiny", sfd), ("query", sfq)]:
        ext = ".sfd" if fn is sfd else ".sfq"
        with open(name + "_le" + ext, "wb") as f:
            f.write(fn("<"))
        with open(name + "_be" + ext, "wb") as f:
            f.write(fn(">"))
