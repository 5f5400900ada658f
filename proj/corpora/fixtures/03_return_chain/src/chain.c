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

int read_len(FILE *f) {
  int v = 0;
  fread(&v, sizeof(int), 1, f);
  return v;
}

int checked_len(FILE *f) {
  int a = read_len(f);
  return a;
}

int get_len(FILE *f) {
  int b = checked_len(f);
  return b;
}

void process(FILE *f) {
  char src[512];
  char dst[128];
  int len;
  memset(src, 'c', sizeof(src));
  len = get_len(f);
  if (len > 128) {
    printf("too long\n");
    exit(3);
  }
  memcpy(dst, src, len);
  printf("len %d sum %d\n", len, checksum(dst, len));
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
