"""empty init files for packages"""
