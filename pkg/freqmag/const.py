"""
The MIT License (MIT)

Copyright (c) 2024-present freqmag contributors

Permission is hereby granted, free of charge, to any person obtaining a
copy of this software and associated documentation files (the "Software"),
to deal in the Software without restriction, including without limitation
the rights to use, copy, modify, merge, publish, distribute, sublicense,
and/or sell copies of the Software, and to permit persons to whom the
Software is furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS
OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
DEALINGS IN THE SOFTWARE.
"""

import re

FRAME_NAME = '{:06d}.png'
FRAME_RE = re.compile(r'^(?P<index>\d{6})\.png$')
MANIFEST_NAME = 'frames.json'
SPEC_NAME = 'spec.json'

# Default alpha x noise evaluation grid.
DEFAULT_ALPHAS = (5.0, 10.0, 20.0, 50.0, 100.0)
DEFAULT_SIGMAS = (0.01, 0.05, 0.1, 0.2)

CHARBONNIER_EPS = 1e-3
CONTRASTIVE_WEIGHT = 0.1

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

CHECKPOINT_MAGIC = b'FQMGCKPT'
CHECKPOINT_VERSION = 1

URL_RE = re.compile(r'^https?://', re.IGNORECASE)
BUILTIN_PREFIX = 'builtin:'
