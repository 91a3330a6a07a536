#!/usr/bin/env python3
"""Regenerates src/font_data.inc: a 1-bit 7x12 ASCII glyph table rasterized
from DejaVu Sans Mono. The output is committed; rerun only to change the font."""
import sys
from PIL import Image, ImageDraw, ImageFont

W, H = 7, 12
font = ImageFont.truetype("/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf", 11)
out = ["// Generated by scripts/gen_font.py. Do not edit.",
       f"// {W}x{H} glyphs, ASCII 32..126, one uint8 row mask per scanline (bit 6 = leftmost).",
       f"inline constexpr int kGlyphWidth = {W};",
       f"inline constexpr int kGlyphHeight = {H};",
       f"inline constexpr unsigned char kGlyphRows[95][{H}] = {{"]
for code in range(32, 127):
    img = Image.new("L", (W, H), 0)
    ImageDraw.Draw(img).text((0, -1), chr(code), fill=255, font=font)
    rows = []
    for y in range(H):
        bits = 0
        for x in range(W):
            if img.getpixel((x, y)) >= 128:
                bits |= 1 << (W - 1 - x)
        rows.append(f"0x{bits:02x}")
    out.append("    {" + ", ".join(rows) + f"}},  // {chr(code)!r}")
out.append("};")
sys.stdout.write("\n".join(out) + "\n")
