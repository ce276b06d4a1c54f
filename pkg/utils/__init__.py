"""Init files para convertir directorios en módulos Python"""
