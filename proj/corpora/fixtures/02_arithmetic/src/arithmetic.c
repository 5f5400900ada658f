typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern FILE *fopen(const char *path, const char *mode);
extern int fclose(FILE *stream);
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);

static int checksum(const char *p, int n) {
  int sum = 0;
  int i;
  for (i = 0; i < n; i++)
    sum = sum + p[i];
  return sum;
}

void process(FILE *f) {
  unsigned char hdr[2];
  char src[1024];
  char dst[256];
  int count;
  int size;
  memset(src, 'a', sizeof(src));
  memset(hdr, 0, sizeof(hdr));
  fread(hdr, 1, 2, f);
  count = hdr[0];
  size = count * 4 + (hdr[1] & 3);
  if (size >= 256) {
    printf("bad size\n");
    return;
  }
  memcpy(dst, src, size);
  printf("size %d sum %d\n", size, checksum(dst, size));
}

int main(int argc, char **argv) {
  FILE *f;
  if (argc < 2)
    return 2;
  f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  process(f);
  fclose(f);
  return 0;
}
