# Este archivo es intencionalmente dejado en blanco.
