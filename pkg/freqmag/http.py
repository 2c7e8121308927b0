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

from __future__ import annotations

import io
import os
import sys
import logging
from typing import Any, Dict, NamedTuple, Optional, Union

import requests
import yarl

from . import __version__
from .errors import HTTPException, InvalidConfig

_log = logging.getLogger(__name__)

__all__ = ('ProxyAuth', 'AssetHTTP')

class ProxyAuth(NamedTuple):
    """
    username: :class:`str`
        The username.
    password: :class:`str`
        The password.
    """
    username: str
    password: str

class AssetHTTP:
    """Fetches remote foreground and background images over HTTP(S).

    Parameters
    ----------
    session: Optional[:class:`requests.Session`]
        A session to reuse; a new one is made otherwise.
    proxy: Optional[:class:`str`]
        A proxy URL.
    proxy_auth: Optional[:class:`ProxyAuth`]
        Credentials for ``proxy``.
    timeout: :class:`float`
        Seconds to wait for the server.
    """

    def __init__(
        self,
        session: Optional[requests.Session] = None,
        *,
        proxy: Optional[str] = None,
        proxy_auth: Optional[ProxyAuth] = None,
        timeout: float = 60.0,
    ) -> None:

        if session is not None and not isinstance(session, requests.Session):
            raise RuntimeError("session is not of type requests.Session")

        self.__session: requests.Session = session or requests.Session()
        self.headers: Dict[str, str] = {
            'User-Agent': f'freqmag ({__version__}) Python/{sys.version_info[0]}.{sys.version_info[1]}'
        }
        self.timeout: float = timeout
        self.proxy: Optional[yarl.URL] = yarl.URL(proxy) if proxy else None
        self._proxy = {self.proxy.scheme: str(self.proxy)} if self.proxy else None
        # Don't set proxy authorization if no proxy URL given
        if proxy_auth and self._proxy:
            self._proxy_auth = (proxy_auth.username, proxy_auth.password)
        else:
            self._proxy_auth = None

    def __enter__(self) -> 'AssetHTTP':
        return self

    def __exit__(self, *args: Any) -> None:
        self.close()

    def fetch(self, url: Union[str, yarl.URL]) -> bytes:
        """Return the body of a successful GET on ``url``."""
        url = yarl.URL(str(url))
        if url.scheme not in ('http', 'https') or not url.host:
            raise InvalidConfig('url', f'{str(url)!r} is not an http(s) URL')
        r: requests.Response = self.__session.get(
            str(url), headers=self.headers, proxies=self._proxy, auth=self._proxy_auth, timeout=self.timeout
        )
        _log.debug(f'GET {url} returned code: {r.status_code}')
        if r.status_code != 200:
            raise HTTPException(r)
        _log.debug(f'GET {url} received {len(r.content)} bytes')
        return r.content

    def download(self, url: Union[str, yarl.URL], fp: Union[str, os.PathLike[Any], io.BufferedIOBase]) -> int:
        """Save the body of ``url`` to a path or binary file, returning the bytes written."""
        data = self.fetch(url)
        if isinstance(fp, io.BufferedIOBase):
            return fp.write(data)
        with open(fp, 'wb') as f:
            return f.write(data)

    def close(self) -> None:
        self.__session.close()
